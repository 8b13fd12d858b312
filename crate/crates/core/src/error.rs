use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("secret pool exhausted: requested {requested} bits, {available} available")]
    PoolExhausted { requested: usize, available: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("message of {len} bits exceeds capacity of {max} bits")]
    MessageTooLong { len: usize, max: usize },

    #[error("malformed encoded message: {0}")]
    MalformedMessage(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numerical evaluation did not converge: {0}")]
    NumericalFailure(&'static str),

    #[error("no acceptable error-rate estimate exists for these parameters")]
    NoSolution,

    #[error("information curves do not cross in the search interval")]
    NoRoot,

    #[error("distilled key is zero for every intensity in the grid")]
    AllZero,

    #[error("distilled key never covers the authentication cost in the search range")]
    NeverBreaksEven,

    #[error("insufficient detections: need {needed}, have {available}")]
    InsufficientDetections { needed: usize, available: usize },

    #[error("error correction did not converge after {passes} passes")]
    NonConvergence { passes: usize },

    #[error("malformed wire data: {0}")]
    Wire(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
