//! The local merit function for the linesearch driver.
//!
//! Anchored at an iterate `(x_k, v_k)` with averaged gradient `g_k` and
//! curvature `λ_k`, the surrogate objective is
//!
//! ```text
//! F_k(x) = ℰ_h(x, v_k) − 2 (v_kᵀ g_k)(v_kᵀ M (x − x_k)) − λ_k (v_kᵀ M (x − x_k))²
//! ```
//!
//! Near an index-1 stationary point of the dimer system this is locally
//! convex, and its steepest-descent direction in the metric `M` is exactly
//! the preconditioned dimer translation direction
//! `p = −(M⁻¹ − 2 v v ᵀ·) g`, which makes a standard Armijo backtracking
//! linesearch applicable.

use crate::dimer::{dimer_energy, evaluate_dimer, DimerEvaluation};
use crate::error::Result;
use crate::linalg::Vector;
use crate::metrics::Metric;
use crate::model::EnergyModel;

/// Quantities frozen at the iterate so that trial points can be scored with
/// energy evaluations alone.
#[derive(Debug, Clone)]
pub struct MeritAnchor {
    pub x: Vector,
    pub v: Vector,
    /// `M v`, cached so trial corrections cost one dot product.
    pub metric_v: Vector,
    /// Averaged gradient at the anchor.
    pub gx: Vector,
    /// `vᵀ gx` at the anchor.
    pub g_along_v: f64,
    /// Curvature along the orientation at the anchor.
    pub lambda: f64,
    /// `ℰ_h(x, v)` at the anchor — also the merit value there.
    pub base_energy: f64,
    pub h: f64,
}

impl MeritAnchor {
    pub fn new(
        x: &Vector,
        v: &Vector,
        eval: &DimerEvaluation,
        base_energy: f64,
        h: f64,
        metric: &dyn Metric,
    ) -> Self {
        MeritAnchor {
            x: x.clone(),
            v: v.clone(),
            metric_v: metric.apply(v),
            gx: eval.gx.clone(),
            g_along_v: v.dot(&eval.gx),
            lambda: eval.lambda,
            base_energy,
            h,
        }
    }

    /// Merit value at `x` given its dimer energy (no model calls).
    pub fn value_with_energy(&self, x: &Vector, dimer_e: f64) -> f64 {
        let q = self.metric_v.dot(&(x - &self.x));
        dimer_e - 2.0 * self.g_along_v * q - self.lambda * q * q
    }
}

/// Merit value at `x`; two energy calls.
pub fn merit_value(model: &dyn EnergyModel, x: &Vector, anchor: &MeritAnchor) -> Result<f64> {
    let e = dimer_energy(model, x, &anchor.v, anchor.h)?;
    Ok(anchor.value_with_energy(x, e))
}

/// The ℓ² gradient of the merit function,
/// `∇F_k(x) = ∇ₓℰ_h(x, v_k) − 2(v_kᵀ g_k) M v_k − 2 λ_k (v_kᵀ M (x−x_k)) M v_k`.
/// Two gradient calls.
pub fn merit_gradient(model: &dyn EnergyModel, x: &Vector, anchor: &MeritAnchor) -> Result<Vector> {
    let ev = evaluate_dimer(model, x, &anchor.v, anchor.h)?;
    let q = anchor.metric_v.dot(&(x - &anchor.x));
    Ok(&ev.gx - (2.0 * anchor.g_along_v + 2.0 * anchor.lambda * q) * &anchor.metric_v)
}

/// Initial-step heuristic for the linesearch translation.
///
/// `dots[j]` holds `p_{M,j} · p_{I,j}` for iteration `j`, the inner product
/// of the preconditioned and unpreconditioned translation directions. For
/// the current iteration `k = dots.len() − 1 ≥ 2` the heuristic averages the
/// ratios `γ_j = dots[j−1] / dots[j]` over the last few iterations and caps
/// the result by both `2 α_prev` and `α_max`. Degenerate histories fall back
/// to `min(α_max, 2 α_prev)`.
pub fn gamma_step_heuristic(dots: &[f64], alpha_prev: f64, alpha_max: f64) -> f64 {
    let fallback = (2.0 * alpha_prev).min(alpha_max);
    if dots.len() < 3 {
        return fallback;
    }
    let k = dots.len() - 1;
    let lo = k.saturating_sub(4).max(2);
    let mut sum = 0.0;
    let mut count = 0.0;
    for j in lo..=k {
        if dots[j] == 0.0 || !dots[j].is_finite() {
            return fallback;
        }
        sum += dots[j - 1] / dots[j];
        count += 1.0;
    }
    let avg = sum / count;
    if !avg.is_finite() || avg <= 0.0 {
        return fallback;
    }
    avg.min(2.0 * alpha_prev).min(alpha_max)
}
