//! Linear (P1) finite-element assembly on a triangulation, and the two
//! metrics built from it: the connectivity norm for atomistic displacement
//! fields and a stabilized Laplacian for nodal fields.

use std::sync::Arc;

use super::{Metric, Triangulation};
use crate::error::{Error, Result};
use crate::linalg::{jacobi_cg, CsrMatrix, Vector};

/// Stiffness matrix and row-sum-lumped mass over all nodes of a mesh.
#[derive(Debug, Clone)]
pub struct P1System {
    pub stiffness: CsrMatrix,
    pub lumped_mass: Vector,
}

/// Assemble the P1 stiffness matrix and lumped mass for every node.
///
/// Element stiffness uses the edge-vector formula
/// `K_ij = (b_i b_j + c_i c_j) / (4 A)` with `b_i = y_j − y_k`,
/// `c_i = x_k − x_j` (cyclic); lumped mass adds `A/3` per vertex.
pub fn assemble_p1(tri: &Triangulation) -> Result<P1System> {
    let n = tri.points.len();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(9 * tri.triangles.len());
    let mut mass = Vector::zeros(n);

    for t in &tri.triangles {
        let p = [tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]];
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
        if area <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "triangle {t:?} has non-positive area {area:.3e}"
            )));
        }
        let mut b = [0.0; 3];
        let mut c = [0.0; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            b[i] = p[j][1] - p[k][1];
            c[i] = p[k][0] - p[j][0];
        }
        for i in 0..3 {
            mass[t[i]] += area / 3.0;
            for j in 0..3 {
                triplets.push((t[i], t[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area)));
            }
        }
    }

    Ok(P1System {
        stiffness: CsrMatrix::from_triplets(n, &triplets),
        lumped_mass: mass,
    })
}

const CG_REL_TOL: f64 = 1e-10;

fn cg_iteration_cap(n: usize) -> usize {
    (20 * n).max(2000)
}

/// Graph/P1-Laplacian norm over atomistic displacements.
///
/// The stiffness matrix of the triangulation, restricted to the movable
/// points, acts independently on the x and y displacement components of
/// the interleaved DOF vector `(x0, y0, x1, y1, ...)\.
pub struct ConnectivityMetric {
    n_free: usize,
    k_free: CsrMatrix,
}

/// Build the connectivity metric from a triangulation of all atoms.
/// At least one fixed point is required, otherwise the restricted
/// stiffness is singular (constants are in its kernel).
pub fn connectivity_metric(tri: &Triangulation) -> Result<ConnectivityMetric> {
    if !tri.fixed.iter().any(|&f| f) {
        return Err(Error::SingularMetric(
            "connectivity metric needs at least one fixed point".into(),
        ));
    }
    let system = assemble_p1(tri)?;
    let free: Vec<usize> = (0..tri.points.len()).filter(|&i| !tri.fixed[i]).collect();
    if free.is_empty() {
        return Err(Error::SingularMetric("no movable points".into()));
    }
    Ok(ConnectivityMetric {
        n_free: free.len(),
        k_free: system.stiffness.restrict(&free),
    })
}

impl ConnectivityMetric {
    fn component(&self, u: &Vector, comp: usize) -> Vector {
        Vector::from_iterator(self.n_free, (0..self.n_free).map(|i| u[2 * i + comp]))
    }

    fn interleave(&self, x: &Vector, y: &Vector) -> Vector {
        let mut out = Vector::zeros(2 * self.n_free);
        for i in 0..self.n_free {
            out[2 * i] = x[i];
            out[2 * i + 1] = y[i];
        }
        out
    }
}

impl Metric for ConnectivityMetric {
    fn dim(&self) -> usize {
        2 * self.n_free
    }

    fn apply(&self, u: &Vector) -> Vector {
        assert_eq!(u.len(), self.dim());
        let kx = self.k_free.matvec(&self.component(u, 0));
        let ky = self.k_free.matvec(&self.component(u, 1));
        self.interleave(&kx, &ky)
    }

    fn solve(&self, g: &Vector) -> Result<Vector> {
        assert_eq!(g.len(), self.dim());
        let cap = cg_iteration_cap(self.n_free);
        let sx = jacobi_cg(&self.k_free, &self.component(g, 0), CG_REL_TOL, cap)?;
        let sy = jacobi_cg(&self.k_free, &self.component(g, 1), CG_REL_TOL, cap)?;
        Ok(self.interleave(&sx, &sy))
    }
}

/// `M = ε K + (1/ε) M_lumped` on the movable nodes of a mesh; SPD by
/// construction for any `ε > 0`.
pub struct StabilizedLaplacianMetric {
    matrix: CsrMatrix,
}

pub fn stabilized_laplacian_metric(
    mesh: &Triangulation,
    epsilon: f64,
) -> Result<StabilizedLaplacianMetric> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let system = assemble_p1(mesh)?;
    let free: Vec<usize> = (0..mesh.points.len()).filter(|&i| !mesh.fixed[i]).collect();
    if free.is_empty() {
        return Err(Error::SingularMetric("no movable nodes".into()));
    }
    let mut matrix = system.stiffness.restrict(&free);
    matrix.scale(epsilon);
    let mass = Vector::from_iterator(free.len(), free.iter().map(|&i| system.lumped_mass[i]));
    matrix.add_diagonal(&(mass / epsilon));
    Ok(StabilizedLaplacianMetric { matrix })
}

impl StabilizedLaplacianMetric {
    /// Dense copy of the assembled operator, for small verification runs.
    pub fn to_dense(&self) -> crate::linalg::Matrix {
        self.matrix.to_dense()
    }
}

impl Metric for StabilizedLaplacianMetric {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn apply(&self, u: &Vector) -> Vector {
        self.matrix.matvec(u)
    }

    fn solve(&self, g: &Vector) -> Result<Vector> {
        jacobi_cg(&self.matrix, g, CG_REL_TOL, cg_iteration_cap(self.matrix.dim()))
    }
}
