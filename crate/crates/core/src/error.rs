use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ViError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value while evaluating {0}")]
    NonFinite(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
}

impl ViError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        ViError::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = ViError> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(ViError::DimensionMismatch { expected, found })
    }
}
