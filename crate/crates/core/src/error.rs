use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (n_max = {n_max})")]
    IndexOutOfRange { index: usize, n_max: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The rate graph has more than one closed communicating class, so the
    /// stationary distribution is not unique.
    #[error("rate graph is not ergodic: {closed_classes} closed classes")]
    NonErgodic { closed_classes: usize },

    #[error("steady-state solve failed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("time step {dt} exceeds stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("zeroth-order generator is singular on the complement of its null vector")]
    SingularReducedOperator,

    #[error("truncation did not converge below n_max = {cap} (last relative change {last_delta:e})")]
    NoConvergence { cap: usize, last_delta: f64 },

    #[error("grid has {found} points, need at least {required}")]
    InsufficientGrid { found: usize, required: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
