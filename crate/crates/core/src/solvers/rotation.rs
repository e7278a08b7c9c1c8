//! Orientation refinement: projected steepest descent on the metric unit
//! sphere with a backtracking linesearch.

use super::SolverConfig;
use crate::dimer::{dimer_energy, evaluate_dimer, rotation_direction, DimerEvaluation};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::metrics::Metric;
use crate::model::EnergyModel;

#[derive(Debug)]
pub struct RotationOutcome {
    /// Refined orientation, metric-unit.
    pub v: Vector,
    /// Last accepted step parameter, fed back in as the next warm start.
    pub beta: f64,
    /// Dimer evaluation at `(x, v)`; callers reuse it, keeping the cost of
    /// a whole outer iteration at two gradient calls plus rotation work.
    pub eval: DimerEvaluation,
    /// `ℰ_h(x, v)` at the output orientation.
    pub dimer_energy: f64,
    /// Rotation residual at the output orientation.
    pub residual: f64,
    pub steps: usize,
    pub gradient_calls: u64,
    pub energy_calls: u64,
}

/// Rotate `v` at fixed `x` until the rotation residual drops to `tol`.
///
/// Each step moves along the geodesic
/// `v_β = cos(tβ) v + sin(tβ) s/t` with `s = −(M⁻¹ − v vᵀ·) h⁻²∇ᵥℰ_h` and
/// `t = ‖s‖_M`, expanding `β` once per step and halving it until the dimer
/// energy decreases sufficiently. The directional derivative of
/// `ℰ_h` along the geodesic is `−h²t²`, so the acceptance test is
/// `ℰ_h(x, v_β) ≤ ℰ_h(x, v) − Θ β h² t²`.
pub fn rotate(
    model: &dyn EnergyModel,
    x: &Vector,
    v: &Vector,
    metric: &dyn Metric,
    beta_in: f64,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<RotationOutcome> {
    let norm = metric.norm(v);
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::non_finite("orientation norm"));
    }
    rotate_from(model, x, v / norm, metric, beta_in, tol, cfg, None)
}

/// As [`rotate`], but with `v` already metric-unit and optionally reusing an
/// existing evaluation at `(x, v)` so the entry residual check is free.
#[allow(clippy::too_many_arguments)]
pub(crate) fn rotate_from(
    model: &dyn EnergyModel,
    x: &Vector,
    mut v: Vector,
    metric: &dyn Metric,
    beta_in: f64,
    tol: f64,
    cfg: &SolverConfig,
    entry: Option<DimerEvaluation>,
) -> Result<RotationOutcome> {
    debug_assert!(tol > 0.0);
    let mut gradient_calls = 0;
    let mut energy_calls = 0;
    let mut eval = match entry {
        Some(e) => e,
        None => {
            gradient_calls += 2;
            evaluate_dimer(model, x, &v, cfg.h)?
        }
    };
    let mut beta = beta_in;
    let mut steps = 0;
    let mut current_energy: Option<f64> = None;
    let h2 = cfg.h * cfg.h;
    let beta_floor = cfg.alpha_min_factor * cfg.beta_max;

    loop {
        let (s_raw, residual) = rotation_direction(&eval, &v, metric)?;
        if residual <= tol {
            let dimer_e = match current_energy {
                Some(e) => e,
                None => {
                    energy_calls += 2;
                    dimer_energy(model, x, &v, cfg.h)?
                }
            };
            return Ok(RotationOutcome {
                v,
                beta,
                eval,
                dimer_energy: dimer_e,
                residual,
                steps,
                gradient_calls,
                energy_calls,
            });
        }
        if steps >= cfg.rotation_max_steps {
            return Err(Error::RotationStall {
                tol,
                residual,
                steps,
            });
        }

        let t = residual; // ‖s‖_M
        let s = -s_raw;
        beta = (2.0 * beta).min(cfg.beta_max);
        let e0 = match current_energy {
            Some(e) => e,
            None => {
                energy_calls += 2;
                dimer_energy(model, x, &v, cfg.h)?
            }
        };

        let (v_next, e_next) = loop {
            let (sin, cos) = (t * beta).sin_cos();
            let trial = cos * &v + (sin / t) * &s;
            energy_calls += 2;
            let e_trial = dimer_energy(model, x, &trial, cfg.h)?;
            if e_trial <= e0 - cfg.theta * beta * h2 * t * t {
                break (trial, e_trial);
            }
            beta *= 0.5;
            if beta < beta_floor {
                return Err(Error::RotationStall {
                    tol,
                    residual,
                    steps,
                });
            }
        };

        // The geodesic step preserves the metric norm exactly in exact
        // arithmetic; renormalize against rounding drift.
        let norm = metric.norm(&v_next);
        v = v_next / norm;
        current_energy = Some(e_next);
        gradient_calls += 2;
        eval = evaluate_dimer(model, x, &v, cfg.h)?;
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::identity_metric;
    use crate::model::{EnergyModel, EvalCounters};
    use crate::oracle::{dense_hessian, min_eigpair, DEFAULT_FD_STEP};
    use crate::problems::{build_morse_vacancy, Quartic2d};
    use approx::assert_relative_eq;

    struct Quadratic {
        diag: Vec<f64>,
        counters: EvalCounters,
    }

    impl EnergyModel for Quadratic {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn energy(&self, x: &Vector) -> f64 {
            self.counters.record_energy();
            x.iter()
                .zip(self.diag.iter())
                .map(|(xi, d)| 0.5 * d * xi * xi)
                .sum()
        }
        fn gradient(&self, x: &Vector) -> Vector {
            self.counters.record_gradient();
            Vector::from_iterator(x.len(), x.iter().zip(self.diag.iter()).map(|(xi, d)| d * xi))
        }
        fn counters(&self) -> &EvalCounters {
            &self.counters
        }
    }

    #[test]
    fn already_aligned_orientation_is_returned_unchanged() {
        let model = Quadratic {
            diag: vec![-4.0, 2.0],
            counters: EvalCounters::default(),
        };
        let metric = identity_metric(2);
        let cfg = SolverConfig::default();
        let v = Vector::from_vec(vec![1.0, 0.0]);
        let x = Vector::from_vec(vec![0.3, -0.2]);
        let out = rotate(&model, &x, &v, &metric, 0.5, 1e-8, &cfg).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.beta, 0.5);
        assert_eq!(out.v, v);
        // one evaluation for the residual check, nothing beyond it
        assert_eq!(out.gradient_calls, 2);
    }

    #[test]
    fn converges_to_minimal_eigenvector_of_quadratic() {
        let model = Quadratic {
            diag: vec![-4.0, 2.0],
            counters: EvalCounters::default(),
        };
        let metric = identity_metric(2);
        let cfg = SolverConfig::default();
        let v = Vector::from_vec(vec![0.3f64.cos(), 0.3f64.sin()]);
        let x = Vector::from_vec(vec![0.7, 0.1]);
        let out = rotate(&model, &x, &v, &metric, 1.0, 1e-8, &cfg).unwrap();
        assert!(out.v[0].abs() >= 1.0 - 1e-6, "v = {:?}", out.v);
        assert!(out.residual <= 1e-8);
        assert_relative_eq!(metric.norm(&out.v), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_dense_eigensolver_on_morse_patch() {
        let model = build_morse_vacancy(4.5, 1.5, 4.0).unwrap();
        assert_eq!(model.dim(), 12);
        let metric = identity_metric(12);
        let mut cfg = SolverConfig::default();
        cfg.rotation_max_steps = 20_000;
        let state = model.initial_state(cfg.h);
        let out = rotate(&model, &state.x, &state.v, &metric, 1.0, 1e-8, &cfg).unwrap();

        let hess = dense_hessian(&model, &state.x, DEFAULT_FD_STEP).unwrap();
        let eig = min_eigpair(&hess);
        let cosine = out.v.dot(&eig.pair.v).abs();
        assert!(cosine >= 1.0 - 1e-4, "cos angle {cosine}");
    }

    #[test]
    fn descent_along_accepted_steps() {
        let model = Quartic2d::new();
        let metric = identity_metric(2);
        let cfg = SolverConfig::default();
        let x = Vector::from_vec(vec![0.4, 0.3]);
        let v = Vector::from_vec(vec![0.6, 0.8]);
        let e_in = dimer_energy(&model, &x, &v, cfg.h).unwrap();
        let out = rotate(&model, &x, &v, &metric, 1.0, 1e-9, &cfg).unwrap();
        assert!(out.dimer_energy <= e_in);
    }
}
