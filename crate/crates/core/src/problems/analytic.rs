//! Small closed-form energy surfaces used for calibration and testing.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{EnergyModel, EvalCounters};

/// `E(x, y) = (x² − 1)² + y²`: two symmetric minima at `(±1, 0)` and a
/// single index-1 saddle at the origin with Hessian `diag(−4, 2)`.
#[derive(Debug, Default)]
pub struct Quartic2d {
    counters: EvalCounters,
}

impl Quartic2d {
    pub fn new() -> Self {
        Self::default()
    }

    /// The saddle location, for reporting distances.
    pub fn saddle() -> Vector {
        Vector::zeros(2)
    }
}

impl EnergyModel for Quartic2d {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, x: &Vector) -> f64 {
        self.counters.record_energy();
        let a = x[0] * x[0] - 1.0;
        a * a + x[1] * x[1]
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.counters.record_gradient();
        Vector::from_vec(vec![4.0 * x[0] * (x[0] * x[0] - 1.0), 2.0 * x[1]])
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}

/// `E(x) = ¼ (1 − x²)²`: minima at `±1`, a maximum at the origin, and
/// turning points (zero curvature) at `±3^{−1/2}`.
#[derive(Debug, Default)]
pub struct DoubleWell1d {
    counters: EvalCounters,
}

impl DoubleWell1d {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn saddle() -> Vector {
        Vector::zeros(1)
    }
}

impl EnergyModel for DoubleWell1d {
    fn dim(&self) -> usize {
        1
    }

    fn energy(&self, x: &Vector) -> f64 {
        self.counters.record_energy();
        let a = 1.0 - x[0] * x[0];
        0.25 * a * a
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.counters.record_gradient();
        Vector::from_vec(vec![x[0] * x[0] * x[0] - x[0]])
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}

/// `E(x) = ¼x⁴ − ½x² + c·x³`: a tilted double well. Unlike the symmetric
/// well, the finite-difference stationary point sits a genuine O(h²) away
/// from the true saddle at the origin, which makes the gap measurable.
#[derive(Debug)]
pub struct AsymmetricWell1d {
    pub c: f64,
    counters: EvalCounters,
}

impl AsymmetricWell1d {
    pub fn new(c: f64) -> Self {
        AsymmetricWell1d {
            c,
            counters: EvalCounters::default(),
        }
    }

    pub fn saddle() -> Vector {
        Vector::zeros(1)
    }
}

impl Default for AsymmetricWell1d {
    fn default() -> Self {
        Self::new(0.1)
    }
}

impl EnergyModel for AsymmetricWell1d {
    fn dim(&self) -> usize {
        1
    }

    fn energy(&self, x: &Vector) -> f64 {
        self.counters.record_energy();
        let t = x[0];
        0.25 * t.powi(4) - 0.5 * t * t + self.c * t.powi(3)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.counters.record_gradient();
        let t = x[0];
        Vector::from_vec(vec![t * t * t - t + 3.0 * self.c * t * t])
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}

/// Central curvature estimate `(E′(x+h) − E′(x−h)) / (2h)` of the double
/// well, the scalar form of the finite-difference Hessian action.
pub fn doublewell_curvature(x: f64, h: f64) -> f64 {
    let model = DoubleWell1d::new();
    let gp = model.gradient(&Vector::from_vec(vec![x + h]))[0];
    let gm = model.gradient(&Vector::from_vec(vec![x - h]))[0];
    (gp - gm) / (2.0 * h)
}

/// Alternative scaling `(E′(x+h) − E′(x−h)) / (2h²)`. Differs from
/// [`doublewell_curvature`] by a factor `1/h`, so both have the same roots.
pub fn doublewell_curvature_alt(x: f64, h: f64) -> f64 {
    doublewell_curvature(x, h) / h
}

/// The two roots `±t_h` of the double well's finite-difference curvature,
/// found by bisection to 1e-12. They converge to `±3^{−1/2}` as `h → 0`.
pub fn doublewell_turning_points(h: f64) -> Result<(f64, f64)> {
    if !(0.0 < h && h < 1.0) {
        return Err(Error::invalid("need 0 < h < 1 for a bracketable root"));
    }
    let f = |x: f64| doublewell_curvature(x, h);
    let (mut lo, mut hi) = (0.0, 1.0);
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(Error::RootBracketFailure { lo, hi });
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let plus = 0.5 * (lo + hi);
    Ok((-plus, plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::linear_fit;
    use approx::assert_relative_eq;

    #[test]
    fn turning_points_limit() {
        let (tm, tp) = doublewell_turning_points(1e-6).unwrap();
        assert_relative_eq!(tp, 0.5773502691896258, epsilon = 1e-9);
        assert_eq!(tm, -tp);
    }

    #[test]
    fn turning_points_match_closed_form() {
        // for this well the curvature is 3x² + h² − 1 exactly
        for &h in &[0.3, 0.1, 0.01] {
            let (_, tp) = doublewell_turning_points(h).unwrap();
            assert_relative_eq!(tp, ((1.0 - h * h) / 3.0).sqrt(), epsilon = 1e-11);
        }
    }

    #[test]
    fn turning_point_gap_is_second_order() {
        let exact = 3f64.powf(-0.5);
        let hs = [0.2, 0.1, 0.05, 0.025];
        let (lx, ly): (Vec<f64>, Vec<f64>) = hs
            .iter()
            .map(|&h| {
                let (_, tp) = doublewell_turning_points(h).unwrap();
                (h.ln(), (tp - exact).abs().ln())
            })
            .unzip();
        let (slope, _, _) = linear_fit(&lx, &ly);
        assert!((slope - 2.0).abs() <= 0.3, "slope {slope}");
    }

    #[test]
    fn curvature_forms_share_roots() {
        let h = 0.05;
        let (_, tp) = doublewell_turning_points(h).unwrap();
        assert!(doublewell_curvature(tp, h).abs() <= 1e-10);
        assert!(doublewell_curvature_alt(tp, h).abs() <= 1e-8);
        assert_relative_eq!(
            doublewell_curvature_alt(0.3, h),
            doublewell_curvature(0.3, h) / h,
            epsilon = 1e-14
        );
    }

    #[test]
    fn quartic_gradient_formula() {
        let m = Quartic2d::new();
        let g = m.gradient(&Vector::from_vec(vec![0.3, -0.7]));
        assert_relative_eq!(g[0], 4.0 * 0.3 * (0.09 - 1.0), epsilon = 1e-15);
        assert_relative_eq!(g[1], -1.4, epsilon = 1e-15);
    }
}
