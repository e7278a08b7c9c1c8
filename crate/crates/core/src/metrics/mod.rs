//! Symmetric positive-definite metrics (preconditioners) and the machinery
//! to build the two nontrivial ones: the connectivity norm assembled on a
//! Delaunay triangulation of atomic positions, and a stabilized Laplacian
//! for nodal fields on a fixed mesh.

mod delaunay;
mod fem;

pub use delaunay::{delaunay, Triangulation};
pub use fem::{
    assemble_p1, connectivity_metric, stabilized_laplacian_metric, ConnectivityMetric, P1System,
    StabilizedLaplacianMetric,
};

use std::sync::Arc;

use crate::error::Result;
use crate::linalg::Vector;

/// SPD operator `M` defining the inner product `uᵀ M w`.
///
/// `solve` is the preconditioner application `M⁻¹ g`. Implementations are
/// immutable after construction and safe to share across solver runs.
pub trait Metric: Send + Sync {
    fn dim(&self) -> usize;

    /// `M u`
    fn apply(&self, u: &Vector) -> Vector;

    /// `M⁻¹ g`
    fn solve(&self, g: &Vector) -> Result<Vector>;

    /// `uᵀ M w`
    fn inner(&self, u: &Vector, w: &Vector) -> f64 {
        u.dot(&self.apply(w))
    }

    /// `sqrt(uᵀ M u)`
    fn norm(&self, u: &Vector) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }
}

/// The ℓ² metric: apply and solve are the identity.
#[derive(Debug, Clone)]
pub struct IdentityMetric {
    dim: usize,
}

pub fn identity_metric(dim: usize) -> IdentityMetric {
    assert!(dim >= 1);
    IdentityMetric { dim }
}

impl Metric for IdentityMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, u: &Vector) -> Vector {
        u.clone()
    }

    fn solve(&self, g: &Vector) -> Result<Vector> {
        Ok(g.clone())
    }

    fn inner(&self, u: &Vector, w: &Vector) -> f64 {
        u.dot(w)
    }

    fn norm(&self, u: &Vector) -> f64 {
        u.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Identity,
    Connectivity,
    StabilizedLaplacian,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Identity => "identity",
            MetricKind::Connectivity => "connectivity",
            MetricKind::StabilizedLaplacian => "stabilized_laplacian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricRefresh {
    #[default]
    FixedAtStart,
    EveryIteration,
}

/// Which metric to use and whether to rebuild it as the walker moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricPolicy {
    pub kind: MetricKind,
    pub refresh: MetricRefresh,
}

impl MetricPolicy {
    /// Per-iteration refresh only makes sense for the connectivity metric,
    /// whose triangulation follows the atoms.
    pub fn new(kind: MetricKind, refresh: MetricRefresh) -> Result<Self> {
        if refresh == MetricRefresh::EveryIteration && kind != MetricKind::Connectivity {
            return Err(crate::error::Error::invalid(
                "refresh = every_iteration is only supported for the connectivity metric",
            ));
        }
        Ok(MetricPolicy { kind, refresh })
    }

    pub fn fixed(kind: MetricKind) -> Self {
        MetricPolicy {
            kind,
            refresh: MetricRefresh::FixedAtStart,
        }
    }
}

/// Hands a metric to the solver at each iterate. For fixed metrics this is
/// just a clone of one `Arc`; refreshing providers rebuild from the state.
pub trait MetricProvider: Sync {
    fn metric(&self, x: &Vector, iteration: usize) -> Result<Arc<dyn Metric>>;
}

/// The common case: one metric for the whole run.
pub struct FixedMetric(pub Arc<dyn Metric>);

impl FixedMetric {
    pub fn identity(dim: usize) -> Self {
        FixedMetric(Arc::new(identity_metric(dim)))
    }
}

impl MetricProvider for FixedMetric {
    fn metric(&self, _x: &Vector, _iteration: usize) -> Result<Arc<dyn Metric>> {
        Ok(self.0.clone())
    }
}
