use thiserror::Error;

/// Errors shared by the whole crate.
///
/// Solver runs deliberately do *not* surface diverging energies as errors;
/// divergence is an expected, reportable outcome and ends up as a
/// [`crate::solvers::SolveStatus`] instead. The variants here are for
/// genuinely broken inputs or infrastructure failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value: {context}")]
    NonFiniteValue { context: String },

    #[error("metric solve failed: {0}")]
    MetricSolveFailure(String),

    #[error("degenerate triangulation input: {0}")]
    DegenerateInput(String),

    #[error("singular metric: {0}")]
    SingularMetric(String),

    #[error("no movable atoms inside the free radius")]
    EmptyFreeSet,

    #[error("failed to bracket a root in [{lo}, {hi}]")]
    RootBracketFailure { lo: f64, hi: f64 },

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error(
        "rotation stalled before reaching tolerance {tol:.3e} \
         (residual {residual:.3e} after {steps} steps)"
    )]
    RotationStall { tol: f64, residual: f64, steps: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFiniteValue {
            context: context.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
