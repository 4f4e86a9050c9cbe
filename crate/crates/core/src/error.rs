use thiserror::Error;

/// Errors surfaced by the simulation kernels.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("incompatible fields: {0}")]
    Incompatible(String),

    #[error("quadrature node search failed to converge: {0}")]
    NodeSearch(String),

    #[error("non-finite amplitude detected at t = {t}: blow-up or numerical fault")]
    BlowUp { t: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SimError::InvalidArgument(msg.into())
    }
}
