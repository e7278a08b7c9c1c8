//! Dimer calculus: finite-difference energy, gradient and Hessian-action
//! identities for a walker pair at `x ± h v`, plus the residual norms every
//! solver terminates on.
//!
//! With two gradient evaluations `∇E(x ± hv)` one obtains
//!
//! * the averaged gradient  `gx = ½(∇E(x+hv) + ∇E(x−hv)) = ∇E(x) + O(h²)`,
//! * the orientation gradient  `gv = (h/2)(∇E(x+hv) − ∇E(x−hv))`,
//! * the Hessian action  `hv = h⁻² gv = ∇²E(x)·v + O(h²)`,
//!
//! all exact on quadratic energies for every `h`.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Vector};
use crate::metrics::Metric;
use crate::model::EnergyModel;

/// Walker pair: position, orientation and the (fixed) half-length `h`.
#[derive(Debug, Clone)]
pub struct DimerState {
    pub x: Vector,
    pub v: Vector,
    pub h: f64,
}

impl DimerState {
    pub fn new(x: Vector, v: Vector, h: f64) -> Self {
        DimerState { x, v, h }
    }

    pub fn evaluate(&self, model: &dyn EnergyModel) -> Result<DimerEvaluation> {
        evaluate_dimer(model, &self.x, &self.v, self.h)
    }
}

/// One dimer force call: everything two endpoint gradients buy.
#[derive(Debug, Clone)]
pub struct DimerEvaluation {
    /// Averaged endpoint gradient `½(∇E(x+hv) + ∇E(x−hv))`.
    pub gx: Vector,
    /// Orientation gradient `(h/2)(∇E(x+hv) − ∇E(x−hv))`.
    pub gv: Vector,
    /// Hessian action along the orientation, `h⁻² gv`.
    pub hv: Vector,
    /// Curvature along the orientation, `vᵀ hv`.
    pub lambda: f64,
}

/// Average of the two endpoint energies, `½(E(x+hv) + E(x−hv))`.
///
/// Exactly two energy calls. Symmetric in `v ↔ −v` bit for bit (the same
/// two endpoints are evaluated in swapped order).
pub fn dimer_energy(model: &dyn EnergyModel, x: &Vector, v: &Vector, h: f64) -> Result<f64> {
    debug_assert!(h > 0.0, "dimer half-length must be positive");
    debug_assert!(v.norm() > 0.0, "orientation must be nonzero");
    let plus = x + h * v;
    let minus = x - h * v;
    let e_plus = model.energy(&plus);
    if !e_plus.is_finite() {
        return Err(Error::non_finite("energy at endpoint x + h*v"));
    }
    let e_minus = model.energy(&minus);
    if !e_minus.is_finite() {
        return Err(Error::non_finite("energy at endpoint x - h*v"));
    }
    Ok(0.5 * (e_plus + e_minus))
}

/// Evaluate the dimer gradients at `(x, v)`. Exactly two gradient calls.
pub fn evaluate_dimer(
    model: &dyn EnergyModel,
    x: &Vector,
    v: &Vector,
    h: f64,
) -> Result<DimerEvaluation> {
    debug_assert!(h > 0.0, "dimer half-length must be positive");
    let plus = x + h * v;
    let minus = x - h * v;
    let g_plus = model.gradient(&plus);
    if !all_finite(&g_plus) {
        return Err(Error::non_finite("gradient at endpoint x + h*v"));
    }
    let g_minus = model.gradient(&minus);
    if !all_finite(&g_minus) {
        return Err(Error::non_finite("gradient at endpoint x - h*v"));
    }
    let gx = 0.5 * (&g_plus + &g_minus);
    let gv = (0.5 * h) * (&g_plus - &g_minus);
    let hv = &gv / (h * h);
    let lambda = v.dot(&hv);
    Ok(DimerEvaluation { gx, gv, hv, lambda })
}

/// Metric norm of the averaged gradient, `sqrt(gxᵀ M⁻¹ gx)`.
///
/// Computed from one metric solve and a dot product; no operator square
/// root is ever formed.
pub fn translation_residual(ev: &DimerEvaluation, metric: &dyn Metric) -> Result<f64> {
    let m_inv_g = metric.solve(&ev.gx)?;
    Ok(ev.gx.dot(&m_inv_g).max(0.0).sqrt())
}

/// Component of the Hessian action orthogonal (in the metric) to `v`,
/// together with its metric norm.
///
/// With `g = hv`, the raw direction is `s_raw = M⁻¹g − v (vᵀg)`; the
/// returned norm is `sqrt(s_rawᵀ M s_raw)`, which is the rotation residual.
/// `s_raw` is M-orthogonal to `v` whenever `‖v‖_M = 1`.
pub fn rotation_direction(
    ev: &DimerEvaluation,
    v: &Vector,
    metric: &dyn Metric,
) -> Result<(Vector, f64)> {
    let g = &ev.hv;
    let mut s_raw = metric.solve(g)?;
    s_raw.axpy(-v.dot(g), v, 1.0);
    let norm = metric.norm(&s_raw);
    Ok((s_raw, norm))
}

/// Rotation residual: metric norm of the projected Hessian action.
pub fn rotation_residual(ev: &DimerEvaluation, v: &Vector, metric: &dyn Metric) -> Result<f64> {
    rotation_direction(ev, v, metric).map(|(_, norm)| norm)
}
