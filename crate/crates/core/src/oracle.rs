//! Independent verification tools: finite-difference gradients and Hessians,
//! dense eigenpairs, Newton refinement of true saddles and of the
//! finite-difference stationary system, and h-convergence studies.
//!
//! Everything here is deliberately decoupled from the solver path it is
//! used to check: derivatives come from fresh finite differences of the
//! model, eigenpairs from a dense symmetric decomposition.

use crate::error::{Error, Result};
use crate::linalg::{linear_fit, Matrix, Vector};
use crate::model::EnergyModel;

/// Central finite differences of the energy; test utility for checking
/// analytic gradients.
pub fn fd_gradient(model: &dyn EnergyModel, x: &Vector, step: f64) -> Vector {
    let n = x.len();
    let mut g = Vector::zeros(n);
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + step;
        let ep = model.energy(&xp);
        xp[i] = x[i] - step;
        let em = model.energy(&xp);
        xp[i] = x[i];
        g[i] = (ep - em) / (2.0 * step);
    }
    g
}

/// Dense Hessian via central differences of the gradient, symmetrized.
/// Guarded to small systems; this is a verification tool, not a solver.
pub fn dense_hessian(model: &dyn EnergyModel, x: &Vector, fd_step: f64) -> Result<Matrix> {
    let n = x.len();
    if n > 1000 {
        return Err(Error::invalid("dense Hessian limited to dim <= 1000"));
    }
    let mut h = Matrix::zeros(n, n);
    let mut xp = x.clone();
    for j in 0..n {
        xp[j] = x[j] + fd_step;
        let gp = model.gradient(&xp);
        xp[j] = x[j] - fd_step;
        let gm = model.gradient(&xp);
        xp[j] = x[j];
        let col = (gp - gm) / (2.0 * fd_step);
        h.set_column(j, &col);
    }
    Ok(0.5 * (&h + h.transpose()))
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct EigPair {
    pub lambda: f64,
    /// Unit eigenvector, oriented so its largest-magnitude entry is positive.
    pub v: Vector,
}

#[derive(Debug, Clone)]
pub struct MinEig {
    pub pair: EigPair,
    /// Second-smallest eigenvalue, for index-1 classification.
    pub second: f64,
}

fn orient(mut v: Vector) -> Vector {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Smallest eigenpair of a symmetric matrix from a full dense symmetric
/// eigendecomposition.
pub fn min_eigpair(h: &Matrix) -> MinEig {
    assert_eq!(h.nrows(), h.ncols());
    let n = h.nrows();
    assert!(n >= 1);
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let lambda = eig.eigenvalues[order[0]];
    let v = orient(eig.eigenvectors.column(order[0]).into_owned()).normalize();
    let second = if n > 1 {
        eig.eigenvalues[order[1]]
    } else {
        f64::INFINITY
    };
    MinEig {
        pair: EigPair { lambda, v },
        second,
    }
}

const NEWTON_MAX_ITER: usize = 50;

fn lu_solve(a: Matrix, b: Vector) -> Result<Vector> {
    let n = b.len();
    let lu = a.lu();
    // partial-pivot elimination with a scale guard
    let min_pivot = (0..n)
        .map(|i| lu.u()[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    if !min_pivot.is_finite() || min_pivot < 1e-14 {
        return Err(Error::invalid(format!(
            "linear system is numerically singular (pivot {min_pivot:.3e})"
        )));
    }
    lu.solve(&b)
        .ok_or_else(|| Error::invalid("linear solve failed"))
}

fn newton<F>(mut z: Vector, residual: F, tol: f64, jac_step: f64) -> Result<(Vector, f64)>
where
    F: Fn(&Vector) -> Vector,
{
    let n = z.len();
    let mut r = residual(&z);
    let mut best = r.norm();
    for iteration in 0..NEWTON_MAX_ITER {
        if best <= tol {
            return Ok((z, best));
        }
        // forward-difference Jacobian; the residual itself stays exact, so
        // the iteration still polishes well below the Jacobian accuracy
        let mut jac = Matrix::zeros(n, n);
        for j in 0..n {
            let mut zp = z.clone();
            zp[j] += jac_step;
            let col = (residual(&zp) - &r) / jac_step;
            jac.set_column(j, &col);
        }
        let step = lu_solve(jac, -&r)?;
        z += step;
        r = residual(&z);
        let norm = r.norm();
        if !norm.is_finite() {
            return Err(Error::NewtonDivergence {
                iterations: iteration + 1,
                residual: norm,
            });
        }
        best = norm;
    }
    if best <= tol {
        Ok((z, best))
    } else {
        Err(Error::NewtonDivergence {
            iterations: NEWTON_MAX_ITER,
            residual: best,
        })
    }
}

/// Stationary point of the finite-difference dimer system at fixed `h`:
/// zero averaged gradient, eigen-alignment of the difference quotient, and
/// unit orientation.
#[derive(Debug, Clone)]
pub struct DimerSaddle {
    pub x: Vector,
    pub v: Vector,
    pub lambda: f64,
    pub residual: f64,
}

/// Newton solve of the `2N+1` system
///
/// ```text
/// ½ (∇E(x+hv) + ∇E(x−hv))            = 0
/// (1/2h)(∇E(x+hv) − ∇E(x−hv)) − λ v  = 0
/// ½ (‖v‖² − 1)                       = 0
/// ```
pub fn newton_dimer_saddle(
    model: &dyn EnergyModel,
    x0: &Vector,
    v0: &Vector,
    h: f64,
    tol: f64,
) -> Result<DimerSaddle> {
    let n = model.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().max(v0.len()),
        });
    }
    let v0n = v0.normalize();
    let lambda0 = {
        let gp = model.gradient(&(x0 + h * &v0n));
        let gm = model.gradient(&(x0 - h * &v0n));
        v0n.dot(&((gp - gm) / (2.0 * h)))
    };
    let mut z = Vector::zeros(2 * n + 1);
    z.rows_mut(0, n).copy_from(x0);
    z.rows_mut(n, n).copy_from(&v0n);
    z[2 * n] = lambda0;

    let residual = |z: &Vector| -> Vector {
        let x = z.rows(0, n).into_owned();
        let v = z.rows(n, n).into_owned();
        let lambda = z[2 * n];
        let gp = model.gradient(&(&x + h * &v));
        let gm = model.gradient(&(&x - h * &v));
        let mut r = Vector::zeros(2 * n + 1);
        r.rows_mut(0, n).copy_from(&(0.5 * (&gp + &gm)));
        r.rows_mut(n, n)
            .copy_from(&((&gp - &gm) / (2.0 * h) - lambda * &v));
        r[2 * n] = 0.5 * (v.norm_squared() - 1.0);
        r
    };

    let (z, res) = newton(z, residual, tol, 1e-6)?;
    let x = z.rows(0, n).into_owned();
    let v = orient(z.rows(n, n).into_owned()).normalize();
    Ok(DimerSaddle {
        x,
        v,
        lambda: z[2 * n],
        residual: res,
    })
}

/// A Newton-refined critical point with its minimal eigenpair.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub x: Vector,
    pub eig: EigPair,
    pub second: f64,
    /// True when exactly one eigenvalue is negative.
    pub index1: bool,
}

/// Newton on `∇E(x) = 0` with the dense finite-difference Hessian as
/// Jacobian, then classify via the minimal eigenpair.
pub fn exact_saddle(model: &dyn EnergyModel, x0: &Vector) -> Result<CriticalPoint> {
    let mut x = x0.clone();
    let mut g = model.gradient(&x);
    let mut converged = g.norm() <= 1e-12;
    for _ in 0..NEWTON_MAX_ITER {
        if converged {
            break;
        }
        let h = dense_hessian(model, &x, DEFAULT_FD_STEP)?;
        let step = lu_solve(h, -&g)?;
        x += step;
        g = model.gradient(&x);
        if !g.norm().is_finite() {
            return Err(Error::NewtonDivergence {
                iterations: NEWTON_MAX_ITER,
                residual: g.norm(),
            });
        }
        converged = g.norm() <= 1e-12;
    }
    if !converged {
        return Err(Error::NewtonDivergence {
            iterations: NEWTON_MAX_ITER,
            residual: g.norm(),
        });
    }
    let hess = dense_hessian(model, &x, DEFAULT_FD_STEP)?;
    let min = min_eigpair(&hess);
    let index1 = min.pair.lambda < 0.0 && min.second > 0.0;
    Ok(CriticalPoint {
        x,
        eig: min.pair,
        second: min.second,
        index1,
    })
}

#[derive(Debug, Clone)]
pub struct GapStudy {
    /// (h, gap) rows in the order of the supplied h values.
    pub rows: Vec<(f64, f64)>,
    /// Log–log slope of gap vs h; absent when a gap underflows to zero.
    pub slope: Option<f64>,
}

impl GapStudy {
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "h,gap")?;
        for &(h, gap) in &self.rows {
            writeln!(w, "{h},{gap}")?;
        }
        if let Some(slope) = self.slope {
            writeln!(w, "# slope,{slope}")?;
        }
        Ok(())
    }
}

/// Distance between the finite-difference stationary triple and the true
/// saddle, swept over `h`:
/// `gap(h) = ‖x_h − x*‖ + ‖v_h − v*‖ + |λ_h − λ*|` with the orientations
/// sign-aligned before subtraction.
pub fn h_gap_study(
    model: &dyn EnergyModel,
    x0: &Vector,
    v0: &Vector,
    h_list: &[f64],
) -> Result<GapStudy> {
    let truth = exact_saddle(model, x0)?;
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let ds = newton_dimer_saddle(model, &truth.x, v0, h, 1e-12)?;
        let mut dv = &ds.v - &truth.eig.v;
        if ds.v.dot(&truth.eig.v) < 0.0 {
            dv = &ds.v + &truth.eig.v;
        }
        let gap = (&ds.x - &truth.x).norm() + dv.norm() + (ds.lambda - truth.eig.lambda).abs();
        rows.push((h, gap));
    }
    let slope = if rows.iter().all(|&(_, g)| g > 0.0) {
        let lx: Vec<f64> = rows.iter().map(|&(h, _)| h.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|&(_, g)| g.ln()).collect();
        Some(linear_fit(&lx, &ly).0)
    } else {
        None
    };
    Ok(GapStudy { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{AsymmetricWell1d, DoubleWell1d, Quartic2d};
    use approx::assert_relative_eq;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn dense_hessian_quartic_saddle() {
        let m = Quartic2d::new();
        let h = dense_hessian(&m, &vec2(0.0, 0.0), DEFAULT_FD_STEP).unwrap();
        assert_relative_eq!(h[(0, 0)], -4.0, epsilon = 1e-6);
        assert_relative_eq!(h[(1, 1)], 2.0, epsilon = 1e-6);
        assert_relative_eq!(h[(0, 1)], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn dense_hessian_exact_on_quadratic() {
        use crate::model::{EnergyModel, EvalCounters};
        struct Quad(EvalCounters);
        impl EnergyModel for Quad {
            fn dim(&self) -> usize {
                2
            }
            fn energy(&self, x: &Vector) -> f64 {
                self.0.record_energy();
                0.5 * (3.0 * x[0] * x[0] + 7.0 * x[1] * x[1]) + x[0] * x[1]
            }
            fn gradient(&self, x: &Vector) -> Vector {
                self.0.record_gradient();
                vec2(3.0 * x[0] + x[1], 7.0 * x[1] + x[0])
            }
            fn counters(&self) -> &EvalCounters {
                &self.0
            }
        }
        let m = Quad(EvalCounters::default());
        let h = dense_hessian(&m, &vec2(0.4, -0.2), DEFAULT_FD_STEP).unwrap();
        assert_relative_eq!(h[(0, 0)], 3.0, epsilon = 1e-9);
        assert_relative_eq!(h[(1, 1)], 7.0, epsilon = 1e-9);
        assert_relative_eq!(h[(0, 1)], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dense_hessian_doublewell_origin() {
        let m = DoubleWell1d::new();
        let h = dense_hessian(&m, &Vector::from_vec(vec![0.0]), DEFAULT_FD_STEP).unwrap();
        assert_relative_eq!(h[(0, 0)], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn min_eigpair_cases() {
        let d = Matrix::from_diagonal(&vec2(-4.0, 2.0));
        let me = min_eigpair(&d);
        assert_relative_eq!(me.pair.lambda, -4.0, epsilon = 1e-12);
        assert_relative_eq!(me.pair.v[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(me.second, 2.0, epsilon = 1e-12);

        let offdiag = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let me = min_eigpair(&offdiag);
        assert_relative_eq!(me.pair.lambda, -1.0, epsilon = 1e-12);
        let expected = 1.0 / 2f64.sqrt();
        assert_relative_eq!(me.pair.v[0].abs(), expected, epsilon = 1e-12);
        assert_relative_eq!(me.pair.v[1].abs(), expected, epsilon = 1e-12);
        assert!(me.pair.v[0] * me.pair.v[1] < 0.0);

        let id = Matrix::identity(2, 2);
        let me = min_eigpair(&id);
        assert_relative_eq!(me.pair.lambda, 1.0, epsilon = 1e-12);
        assert!(!(me.pair.lambda < 0.0 && me.second > 0.0)); // not index-1
    }

    #[test]
    fn min_eigpair_residual_invariant() {
        let h = Matrix::from_row_slice(3, 3, &[2.0, -1.0, 0.3, -1.0, 1.5, 0.2, 0.3, 0.2, -0.7]);
        let h = 0.5 * (&h + h.transpose());
        let me = min_eigpair(&h);
        let r = &h * &me.pair.v - me.pair.lambda * &me.pair.v;
        assert!(r.norm() <= 1e-8 * h.norm());
    }

    #[test]
    fn newton_dimer_saddle_quartic() {
        let m = Quartic2d::new();
        let h = 1e-3;
        let ds = newton_dimer_saddle(&m, &vec2(0.1, 0.1), &vec2(1.0, 0.0), h, 1e-12).unwrap();
        assert!(ds.x.norm() <= 1e-10, "x_h = {:?}", ds.x);
        assert_relative_eq!(ds.v[0].abs(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(ds.lambda, 4.0 * (h * h - 1.0), epsilon = 1e-9);
    }

    #[test]
    fn newton_dimer_saddle_shifted_by_asymmetry() {
        let m = AsymmetricWell1d::new(0.1);
        let one = Vector::from_vec(vec![1.0]);
        let ds =
            newton_dimer_saddle(&m, &Vector::from_vec(vec![0.05]), &one, 0.1, 1e-12).unwrap();
        let truth = exact_saddle(&m, &Vector::from_vec(vec![0.05])).unwrap();
        assert!((ds.x[0] - truth.x[0]).abs() > 1e-5);
    }

    #[test]
    fn newton_dimer_saddle_doublewell_symmetric() {
        let m = DoubleWell1d::new();
        let one = Vector::from_vec(vec![1.0]);
        let ds = newton_dimer_saddle(&m, &Vector::from_vec(vec![0.1]), &one, 0.05, 1e-12).unwrap();
        assert!(ds.x[0].abs() <= 1e-12);
        assert!(ds.lambda < 0.0);
    }

    #[test]
    fn exact_saddle_quartic() {
        let m = Quartic2d::new();
        let cp = exact_saddle(&m, &vec2(0.1, 0.2)).unwrap();
        assert!(cp.x.norm() <= 1e-9);
        assert_relative_eq!(cp.eig.lambda, -4.0, epsilon = 1e-5);
        assert!(cp.index1);

        // starting near a minimum lands on the minimum: not index-1
        let cp = exact_saddle(&m, &vec2(0.9, 0.1)).unwrap();
        assert_relative_eq!(cp.x[0], 1.0, epsilon = 1e-8);
        assert!(cp.eig.lambda > 0.0);
        assert!(!cp.index1);
    }

    #[test]
    fn exact_saddle_doublewell() {
        let m = DoubleWell1d::new();
        let cp = exact_saddle(&m, &Vector::from_vec(vec![0.1])).unwrap();
        assert!(cp.x[0].abs() <= 1e-10);
        assert_relative_eq!(cp.eig.lambda, -1.0, epsilon = 1e-5);
    }

    #[test]
    fn gap_study_slope_on_asymmetric_well() {
        let m = AsymmetricWell1d::new(0.1);
        let study = h_gap_study(
            &m,
            &Vector::from_vec(vec![0.05]),
            &Vector::from_vec(vec![1.0]),
            &[0.2, 0.1, 0.05, 0.025],
        )
        .unwrap();
        let slope = study.slope.unwrap();
        assert!((1.7..=2.3).contains(&slope), "slope {slope}");
    }

    #[test]
    fn gap_study_quadratic_is_exact() {
        use crate::model::{EnergyModel, EvalCounters};
        struct Saddle(EvalCounters);
        impl EnergyModel for Saddle {
            fn dim(&self) -> usize {
                2
            }
            fn energy(&self, x: &Vector) -> f64 {
                self.0.record_energy();
                0.5 * (-3.0 * x[0] * x[0] + 2.0 * x[1] * x[1])
            }
            fn gradient(&self, x: &Vector) -> Vector {
                self.0.record_gradient();
                vec2(-3.0 * x[0], 2.0 * x[1])
            }
            fn counters(&self) -> &EvalCounters {
                &self.0
            }
        }
        let m = Saddle(EvalCounters::default());
        let study = h_gap_study(&m, &vec2(0.1, 0.1), &vec2(1.0, 0.0), &[0.2, 0.1]).unwrap();
        for &(_, gap) in &study.rows {
            assert!(gap <= 1e-10, "gap {gap}");
        }
    }
}
