use thiserror::Error;

pub type Result<T, E = PatError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PatError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("propagation became unstable (non-finite values) at time step {step}")]
    Instability { step: usize },

    #[error("iteration diverged: residual {residual:.3e} exceeds ten times the initial {initial:.3e}; reduce the step size")]
    Divergence { residual: f64, initial: f64 },

    #[error("numerical breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },

    #[error("discrepancy level {threshold:.3e} not reached within {iterations} iterations")]
    NotReached { threshold: f64, iterations: usize },

    #[error("power iteration could not find a nonzero start vector")]
    ZeroStart,

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PatError {
    /// True for failures that come from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PatError::Instability { .. }
                | PatError::Divergence { .. }
                | PatError::Breakdown { .. }
                | PatError::NotReached { .. }
                | PatError::ZeroStart
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> PatError {
    PatError::InvalidArgument(msg.into())
}
