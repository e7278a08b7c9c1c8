//! A scalar phase-field energy on the unit square,
//! `E(u) = (ε/2)∫|∇u|² + (1/2ε)∫(u² − 1)²`, discretized with P1 elements on
//! a structured right-triangle mesh and lumped nodal quadrature for the
//! quartic term. Boundary values are pinned to −1 on the vertical edges
//! (x ∈ {0, 1}) and +1 on the horizontal ones, the x-rule winning at the
//! corners.

use std::io::Write;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dimer::DimerState;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::metrics::{
    assemble_p1, stabilized_laplacian_metric, Metric, P1System, StabilizedLaplacianMetric,
    Triangulation,
};
use crate::model::{EnergyModel, EvalCounters};

/// Structured mesh of the unit square with `n` nodes per side, each cell
/// split into two right triangles; boundary nodes flagged fixed.
pub fn structured_unit_square(n: usize) -> Triangulation {
    assert!(n >= 3, "need at least 3 nodes per side");
    let dx = 1.0 / (n - 1) as f64;
    let mut points = Vec::with_capacity(n * n);
    let mut fixed = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push([i as f64 * dx, j as f64 * dx]);
            fixed.push(i == 0 || i == n - 1 || j == 0 || j == n - 1);
        }
    }
    let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
    let node = |i: usize, j: usize| j * n + i;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            triangles.push([node(i, j), node(i + 1, j), node(i + 1, j + 1)]);
            triangles.push([node(i, j), node(i + 1, j + 1), node(i, j + 1)]);
        }
    }
    Triangulation {
        points,
        triangles,
        fixed,
    }
}

pub struct PhaseField {
    n: usize,
    epsilon: f64,
    mesh: Triangulation,
    fem: P1System,
    free_nodes: Vec<usize>,
    /// Full nodal vector holding the boundary values, zero on free nodes.
    boundary: Vector,
    counters: EvalCounters,
}

pub fn build_phase_field(n: usize, epsilon: f64) -> Result<PhaseField> {
    if n < 3 {
        return Err(Error::invalid("need n >= 3 nodes per side"));
    }
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let mesh = structured_unit_square(n);
    let fem = assemble_p1(&mesh)?;
    let free_nodes: Vec<usize> = (0..mesh.points.len()).filter(|&i| !mesh.fixed[i]).collect();
    let mut boundary = Vector::zeros(mesh.points.len());
    for (i, p) in mesh.points.iter().enumerate() {
        if !mesh.fixed[i] {
            continue;
        }
        let on_vertical = p[0] == 0.0 || p[0] == 1.0;
        boundary[i] = if on_vertical { -1.0 } else { 1.0 };
    }
    Ok(PhaseField {
        n,
        epsilon,
        mesh,
        fem,
        free_nodes,
        boundary,
        counters: EvalCounters::default(),
    })
}

impl PhaseField {
    pub fn nodes_per_side(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mesh(&self) -> &Triangulation {
        &self.mesh
    }

    pub fn free_dof(&self) -> usize {
        self.free_nodes.len()
    }

    /// Full nodal field: boundary values plus the free block `x`.
    pub fn full_field(&self, x: &Vector) -> Vector {
        assert_eq!(x.len(), self.free_dof());
        let mut u = self.boundary.clone();
        for (slot, &i) in self.free_nodes.iter().enumerate() {
            u[i] = x[slot];
        }
        u
    }

    pub fn stabilized_metric(&self) -> Result<Arc<StabilizedLaplacianMetric>> {
        Ok(Arc::new(stabilized_laplacian_metric(
            &self.mesh,
            self.epsilon,
        )?))
    }

    /// Preconditioned descent with backtracking from the constant interior
    /// fill `sign·1`, run until the metric residual drops below `tol`.
    pub fn find_minimum(&self, sign: f64, metric: &dyn Metric, tol: f64) -> Result<Vector> {
        let mut x = Vector::from_element(self.free_dof(), sign.signum());
        let mut step = 1.0;
        for _ in 0..20_000 {
            let g = self.gradient(&x);
            let d = metric.solve(&g)?;
            let res = g.dot(&d).max(0.0).sqrt();
            if res <= tol {
                return Ok(x);
            }
            let e0 = self.energy(&x);
            let slope = g.dot(&d); // = ‖g‖²_{M⁻¹}
            loop {
                let trial = &x - step * &d;
                let e1 = self.energy(&trial);
                if e1 <= e0 - 1e-4 * step * slope {
                    x = trial;
                    step = (step * 1.5).min(1.0);
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    return Err(Error::invalid(
                        "descent stalled before reaching the minimum tolerance",
                    ));
                }
            }
        }
        Err(Error::invalid("minimum search exceeded its iteration cap"))
    }

    /// Starting dimer state: a seeded uniform perturbation of `minimum`
    /// (amplitude `delta` per node) and the metric inverted against a
    /// vector of ones as orientation, normalized in that metric.
    pub fn initial_state(
        &self,
        minimum: &Vector,
        metric: &dyn Metric,
        seed: u64,
        delta: f64,
        h: f64,
    ) -> Result<DimerState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Vector::from_iterator(
            minimum.len(),
            minimum.iter().map(|&m| m + rng.random_range(-delta..delta)),
        );
        let ones = Vector::from_element(self.free_dof(), 1.0);
        let mut v = metric.solve(&ones)?;
        let norm = metric.norm(&v);
        if norm <= 0.0 {
            return Err(Error::SingularMetric("orientation normalization".into()));
        }
        v /= norm;
        Ok(DimerState::new(x, v, h))
    }

    /// Node values on the full grid, row-major, one line per row.
    pub fn write_grid<W: Write>(&self, x: &Vector, w: &mut W) -> std::io::Result<()> {
        let u = self.full_field(x);
        for j in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|i| format!("{}", u[j * self.n + i])).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl EnergyModel for PhaseField {
    fn dim(&self) -> usize {
        self.free_dof()
    }

    fn energy(&self, x: &Vector) -> f64 {
        self.counters.record_energy();
        let u = self.full_field(x);
        let ku = self.fem.stiffness.matvec(&u);
        let mut e = 0.5 * self.epsilon * u.dot(&ku);
        // nodal quadrature of the quartic term; boundary nodes sit at ±1
        // where it vanishes, so the free sum is the whole of it
        for &i in &self.free_nodes {
            let q = u[i] * u[i] - 1.0;
            e += self.fem.lumped_mass[i] * q * q / (2.0 * self.epsilon);
        }
        e
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.counters.record_gradient();
        let u = self.full_field(x);
        let ku = self.fem.stiffness.matvec(&u);
        Vector::from_iterator(
            self.free_dof(),
            self.free_nodes.iter().map(|&i| {
                self.epsilon * ku[i]
                    + 2.0 * self.fem.lumped_mass[i] * u[i] * (u[i] * u[i] - 1.0) / self.epsilon
            }),
        )
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mesh_counts() {
        let mesh = structured_unit_square(5);
        assert_eq!(mesh.points.len(), 25);
        assert_eq!(mesh.triangles.len(), 2 * 16);
        assert_eq!(mesh.fixed.iter().filter(|&&f| f).count(), 16);
    }

    #[test]
    fn free_dof_matches_interior_grid() {
        for (n, approx_target) in [(51usize, 2405.0), (61, 3485.0), (101, 9805.0), (151, 22205.0)]
        {
            let free = (n - 2) * (n - 2);
            let rel = (free as f64 - approx_target).abs() / approx_target;
            assert!(rel <= 0.01, "n = {n}: {free} vs {approx_target}");
        }
        let pf = build_phase_field(9, 0.1).unwrap();
        assert_eq!(pf.free_dof(), 49);
    }

    #[test]
    fn boundary_values_with_corner_precedence() {
        let pf = build_phase_field(4, 0.1).unwrap();
        let u = pf.full_field(&Vector::zeros(pf.free_dof()));
        // corners are on both edge families; the vertical (−1) rule wins
        assert_eq!(u[0], -1.0);
        assert_eq!(u[3], -1.0);
        // interior of the bottom edge is +1, of the left edge −1
        assert_eq!(u[1], 1.0);
        assert_eq!(u[4], -1.0);
    }

    #[test]
    fn constant_fill_has_no_quartic_energy() {
        let pf = build_phase_field(6, 0.2).unwrap();
        let x = Vector::from_element(pf.free_dof(), 1.0);
        let u = pf.full_field(&x);
        let ku = pf.fem.stiffness.matvec(&u);
        let stiffness_part = 0.5 * pf.epsilon() * u.dot(&ku);
        assert_relative_eq!(pf.energy(&x), stiffness_part, max_relative = 1e-12);
    }

    #[test]
    fn minima_are_distinct() {
        let pf = build_phase_field(9, 0.2).unwrap();
        let metric = pf.stabilized_metric().unwrap();
        let up = pf.find_minimum(1.0, metric.as_ref(), 1e-10).unwrap();
        let down = pf.find_minimum(-1.0, metric.as_ref(), 1e-10).unwrap();
        assert!((&up - &down).norm() > 1e-2);
        assert!(pf.gradient(&up).norm() <= 1e-8);
        assert!(pf.gradient(&down).norm() <= 1e-8);
    }

    #[test]
    fn initial_state_is_seed_deterministic() {
        let pf = build_phase_field(7, 0.1).unwrap();
        let metric = pf.stabilized_metric().unwrap();
        let minimum = pf.find_minimum(1.0, metric.as_ref(), 1e-9).unwrap();
        let a = pf
            .initial_state(&minimum, metric.as_ref(), 42, 1e-2, 1e-3)
            .unwrap();
        let b = pf
            .initial_state(&minimum, metric.as_ref(), 42, 1e-2, 1e-3)
            .unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.v, b.v);
        let c = pf
            .initial_state(&minimum, metric.as_ref(), 43, 1e-2, 1e-3)
            .unwrap();
        assert_ne!(a.x, c.x);
        // orientation is metric-unit
        assert_relative_eq!(metric.norm(&a.v), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_export_shape() {
        let pf = build_phase_field(4, 0.1).unwrap();
        let x = Vector::zeros(pf.free_dof());
        let mut buf = Vec::new();
        pf.write_grid(&x, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.split_whitespace().count() == 4));
    }
}
