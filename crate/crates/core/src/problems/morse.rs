//! A vacancy in a two-dimensional triangular lattice of Morse atoms.
//!
//! The central atom is removed, one of its nearest neighbours is moved
//! partway into the gap, and only atoms within a chosen radius of the
//! vacancy may relax. The pair energy is summed over all unordered atom
//! pairs with no cutoff.

use std::sync::{Arc, OnceLock};

use crate::dimer::DimerState;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::metrics::{
    connectivity_metric, delaunay, ConnectivityMetric, Metric, MetricProvider, MetricRefresh,
    Triangulation,
};
use crate::model::{EnergyModel, EvalCounters};

/// Morse pair potential `V(r) = e^{−2a(r−1)} − 2 e^{−a(r−1)}` and its
/// derivative. Minimum of depth −1 at `r = 1`.
pub fn morse_pair(r: f64, a: f64) -> (f64, f64) {
    let e = (-a * (r - 1.0)).exp();
    let v = e * e - 2.0 * e;
    let dv = -2.0 * a * e * e + 2.0 * a * e;
    (v, dv)
}

pub struct MorseVacancy {
    stiffness: f64,
    /// All atoms; the displaced atom already sits at its moved position.
    positions: Vec<[f64; 2]>,
    free_mask: Vec<bool>,
    free_index: Vec<usize>,
    /// Slot (within the free list) of the displaced atom.
    displaced_slot: usize,
    /// Pair energy among the fixed atoms; constant for the whole run.
    fixed_pair_energy: f64,
    counters: EvalCounters,
}

impl MorseVacancy {
    /// Assemble from explicit positions, e.g. for small test systems.
    pub fn from_positions(
        positions: Vec<[f64; 2]>,
        free: Vec<bool>,
        stiffness: f64,
    ) -> Result<Self> {
        if positions.len() != free.len() {
            return Err(Error::DimensionMismatch {
                expected: positions.len(),
                got: free.len(),
            });
        }
        let free_index: Vec<usize> = (0..positions.len()).filter(|&i| free[i]).collect();
        if free_index.is_empty() {
            return Err(Error::EmptyFreeSet);
        }
        let mut model = MorseVacancy {
            stiffness,
            positions,
            free_mask: free,
            free_index,
            displaced_slot: 0,
            fixed_pair_energy: 0.0,
            counters: EvalCounters::default(),
        };
        model.fixed_pair_energy = model.compute_fixed_pair_energy();
        Ok(model)
    }

    fn compute_fixed_pair_energy(&self) -> f64 {
        let fixed: Vec<usize> = (0..self.positions.len())
            .filter(|&i| !self.free_mask[i])
            .collect();
        let mut e = 0.0;
        for (k, &i) in fixed.iter().enumerate() {
            for &j in &fixed[k + 1..] {
                let d = distance(self.positions[i], self.positions[j]);
                e += morse_pair(d, self.stiffness).0;
            }
        }
        e
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn n_free(&self) -> usize {
        self.free_index.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    /// Free-atom coordinates as the interleaved DOF vector (x0, y0, x1, ...).
    pub fn initial_coordinates(&self) -> Vector {
        let mut x = Vector::zeros(2 * self.n_free());
        for (slot, &i) in self.free_index.iter().enumerate() {
            x[2 * slot] = self.positions[i][0];
            x[2 * slot + 1] = self.positions[i][1];
        }
        x
    }

    /// Starting dimer state: the walker at the as-built coordinates, the
    /// orientation a unit vector on the displaced atom's x-coordinate
    /// (the displacement axis), zero elsewhere.
    pub fn initial_state(&self, h: f64) -> DimerState {
        let x = self.initial_coordinates();
        let mut v = Vector::zeros(x.len());
        v[2 * self.displaced_slot] = 1.0;
        DimerState::new(x, v, h)
    }

    /// All atom positions with the free block replaced by `x`.
    pub fn scatter(&self, x: &Vector) -> Vec<[f64; 2]> {
        assert_eq!(x.len(), 2 * self.n_free());
        let mut pos = self.positions.clone();
        for (slot, &i) in self.free_index.iter().enumerate() {
            pos[i] = [x[2 * slot], x[2 * slot + 1]];
        }
        pos
    }

    /// Delaunay triangulation of the atoms at configuration `x`, with the
    /// movable flags carried over.
    pub fn triangulation(&self, x: &Vector) -> Result<Triangulation> {
        let pos = self.scatter(x);
        let mut tri = delaunay(&pos)?;
        tri.fixed.copy_from_slice(
            &(0..pos.len())
                .map(|i| !self.free_mask[i])
                .collect::<Vec<_>>(),
        );
        Ok(tri)
    }

    pub fn connectivity_provider(
        self: &Arc<Self>,
        refresh: MetricRefresh,
    ) -> MorseConnectivityProvider {
        MorseConnectivityProvider {
            model: self.clone(),
            refresh,
            initial: OnceLock::new(),
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

impl EnergyModel for MorseVacancy {
    fn dim(&self) -> usize {
        2 * self.n_free()
    }

    fn energy(&self, x: &Vector) -> f64 {
        self.counters.record_energy();
        let pos = self.scatter(x);
        // fixed-fixed pairs are a precomputed constant; free-free pairs are
        // seen from both sides, hence the half weight
        let mut e = self.fixed_pair_energy;
        for &i in &self.free_index {
            for (j, pj) in pos.iter().enumerate() {
                if j == i {
                    continue;
                }
                let v = morse_pair(distance(pos[i], *pj), self.stiffness).0;
                e += if self.free_mask[j] { 0.5 * v } else { v };
            }
        }
        e
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.counters.record_gradient();
        let pos = self.scatter(x);
        let mut g = Vector::zeros(x.len());
        for (slot, &i) in self.free_index.iter().enumerate() {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for (j, pj) in pos.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = distance(pos[i], *pj);
                let dv = morse_pair(d, self.stiffness).1;
                gx += dv * (pos[i][0] - pj[0]) / d;
                gy += dv * (pos[i][1] - pj[1]) / d;
            }
            g[2 * slot] = gx;
            g[2 * slot + 1] = gy;
        }
        g
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}

/// Triangular lattice of unit spacing inside `r_total` of the origin, the
/// origin atom removed, a nearest neighbour moved `displaced_fraction` of
/// the way into the gap, atoms within `r_free` of the vacancy movable.
pub fn build_morse_vacancy(r_total: f64, r_free: f64, stiffness: f64) -> Result<MorseVacancy> {
    build_morse_vacancy_with(r_total, r_free, stiffness, 0.5)
}

pub fn build_morse_vacancy_with(
    r_total: f64,
    r_free: f64,
    stiffness: f64,
    displaced_fraction: f64,
) -> Result<MorseVacancy> {
    if !(r_total > r_free && r_free > 1.0) {
        return Err(Error::invalid("need r_total > r_free > 1"));
    }
    if !(0.0..1.0).contains(&displaced_fraction) {
        return Err(Error::invalid("displaced_fraction must lie in [0, 1)"));
    }

    let mut lattice: Vec<[f64; 2]> = Vec::new();
    let span = r_total.ceil() as i64 + 1;
    for j in -span..=span {
        for i in -span..=span {
            let x = i as f64 + 0.5 * j as f64;
            let y = 3f64.sqrt() / 2.0 * j as f64;
            let r = (x * x + y * y).sqrt();
            if r <= r_total + 1e-9 && r > 1e-9 {
                lattice.push([x, y]);
            }
        }
    }
    // stable ordering independent of the loop structure
    lattice.sort_by(|a, b| (a[1], a[0]).partial_cmp(&(b[1], b[0])).unwrap());

    let mover = lattice
        .iter()
        .position(|p| distance(*p, [1.0, 0.0]) < 1e-9)
        .expect("nearest neighbour (1, 0) is always on the lattice");

    let free: Vec<bool> = lattice
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() <= r_free + 1e-9)
        .collect();
    if !free.iter().any(|&f| f) {
        return Err(Error::EmptyFreeSet);
    }

    let mut positions = lattice;
    positions[mover] = [1.0 - displaced_fraction, 0.0];

    let mut model = MorseVacancy::from_positions(positions, free, stiffness)?;
    model.displaced_slot = model
        .free_index
        .iter()
        .position(|&i| i == mover)
        .expect("the displaced atom is inside the free radius");
    Ok(model)
}

/// Connectivity metric tied to a vacancy model: either triangulated once at
/// the starting configuration or rebuilt from the walker position every
/// iteration.
pub struct MorseConnectivityProvider {
    model: Arc<MorseVacancy>,
    refresh: MetricRefresh,
    initial: OnceLock<Arc<ConnectivityMetric>>,
}

impl MetricProvider for MorseConnectivityProvider {
    fn metric(&self, x: &Vector, _iteration: usize) -> Result<Arc<dyn Metric>> {
        match self.refresh {
            MetricRefresh::FixedAtStart => {
                if let Some(m) = self.initial.get() {
                    return Ok(m.clone());
                }
                let reference = self.model.initial_coordinates();
                let metric =
                    Arc::new(connectivity_metric(&self.model.triangulation(&reference)?)?);
                let _ = self.initial.set(metric.clone());
                Ok(metric)
            }
            MetricRefresh::EveryIteration => Ok(Arc::new(connectivity_metric(
                &self.model.triangulation(x)?,
            )?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pair_minimum_at_unit_distance() {
        let (v, dv) = morse_pair(1.0, 4.0);
        assert_relative_eq!(v, -1.0, epsilon = 1e-15);
        assert_relative_eq!(dv, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn two_atom_system_at_unit_distance() {
        let model =
            MorseVacancy::from_positions(vec![[0.0, 0.0], [1.0, 0.0]], vec![true, false], 4.0)
                .unwrap();
        let x = model.initial_coordinates();
        assert_relative_eq!(model.energy(&x), -1.0, epsilon = 1e-15);
        assert!(model.gradient(&x).norm() <= 1e-14);
    }

    #[test]
    fn free_counts_by_radius() {
        // triangular lattice shells: 18 atoms within r=2.2, 42 within 3.5,
        // 72 within 4.4 (the vacancy itself removed)
        for (r_free, expect) in [(2.2, 18), (3.5, 42), (4.4, 72)] {
            let model = build_morse_vacancy(r_free + 3.0, r_free, 4.0).unwrap();
            assert_eq!(model.n_free(), expect, "r_free = {r_free}");
            assert_eq!(model.dim(), 2 * expect);
        }
    }

    #[test]
    fn initial_orientation_is_displacement_axis() {
        let model = build_morse_vacancy(4.5, 1.5, 4.0).unwrap();
        assert_eq!(model.n_free(), 6);
        let state = model.initial_state(1e-3);
        assert_relative_eq!(state.v.norm(), 1.0);
        // a single nonzero component, on an x-coordinate
        let nonzero: Vec<usize> = (0..state.v.len()).filter(|&i| state.v[i] != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0] % 2, 0);
        // the displaced atom sits at (0.5, 0)
        assert_relative_eq!(state.x[nonzero[0]], 0.5, epsilon = 1e-12);
        assert_relative_eq!(state.x[nonzero[0] + 1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn energy_decomposition_matches_full_pair_sum() {
        let model = build_morse_vacancy(3.2, 1.5, 4.0).unwrap();
        let x = model.initial_coordinates();
        let pos = model.scatter(&x);
        let mut brute = 0.0;
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                brute += morse_pair(distance(pos[i], pos[j]), 4.0).0;
            }
        }
        assert_relative_eq!(model.energy(&x), brute, max_relative = 1e-12);
    }

    #[test]
    fn fixed_atoms_are_not_dof() {
        let model = build_morse_vacancy(4.0, 1.5, 4.0).unwrap();
        assert!(model.n_atoms() > model.n_free());
        assert_eq!(model.dim(), 2 * model.n_free());
    }
}
