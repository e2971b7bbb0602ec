use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WptError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("insufficient sampling: need at least {required} samples per period, got {provided}")]
    InsufficientSampling { required: usize, provided: usize },

    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, WptError>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> WptError {
    WptError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
