//! Dense vector alias plus the minimal sparse machinery the metrics need.

use crate::error::{Error, Result};

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Symmetric sparse matrix in compressed-sparse-row form (full pattern stored).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet index out of range");
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, u: &Vector) -> Vector {
        assert_eq!(u.len(), self.n);
        let mut out = Vector::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * u[self.col_idx[k]];
            }
            out[i] = acc;
        }
        out
    }

    pub fn diagonal(&self) -> Vector {
        let mut d = Vector::zeros(self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    /// Dense copy, for small verification problems only.
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }

    /// Keep only rows/columns listed in `keep` (in that order).
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for k in self.row_ptr[old_i]..self.row_ptr[old_i + 1] {
                let old_j = self.col_idx[k];
                if map[old_j] != usize::MAX {
                    triplets.push((new_i, map[old_j], self.values[k]));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), &triplets)
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn add_diagonal(&mut self, d: &Vector) {
        assert_eq!(d.len(), self.n);
        let mut triplets = Vec::with_capacity(self.values.len() + self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                triplets.push((i, self.col_idx[k], self.values[k]));
            }
            triplets.push((i, i, d[i]));
        }
        *self = CsrMatrix::from_triplets(self.n, &triplets);
    }
}

/// Jacobi-scaled conjugate gradients for SPD systems.
///
/// Converges to a relative residual of `rel_tol`; deterministic for fixed
/// inputs. Fails with `MetricSolveFailure` if the iteration cap is exhausted
/// or the operator turns out not to be positive definite.
pub fn jacobi_cg(a: &CsrMatrix, b: &Vector, rel_tol: f64, max_iter: usize) -> Result<Vector> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(Vector::zeros(n));
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::MetricSolveFailure(
            "non-positive diagonal entry".into(),
        ));
    }
    let precond = |r: &Vector| -> Vector {
        Vector::from_iterator(n, r.iter().zip(diag.iter()).map(|(ri, di)| ri / di))
    };

    let mut x = Vector::zeros(n);
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let tol = rel_tol * b_norm;

    for _ in 0..max_iter {
        if r.norm() <= tol {
            return Ok(x);
        }
        let q = a.matvec(&p);
        let pq = p.dot(&q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(Error::MetricSolveFailure(
                "operator is not positive definite".into(),
            ));
        }
        let alpha = rz / pq;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &q, 1.0);
        z = precond(&r);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p = z + beta * &p;
    }
    if r.norm() <= tol {
        Ok(x)
    } else {
        Err(Error::MetricSolveFailure(format!(
            "conjugate gradients did not reach tolerance {rel_tol:.1e} within {max_iter} iterations"
        )))
    }
}

/// Least-squares line through (x, y): returns (slope, intercept, r_squared).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(n >= 2.0, "need at least two points to fit a line");
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
