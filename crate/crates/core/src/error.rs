use thiserror::Error;

/// Errors raised by the diagnostics and experiment runners.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or configuration parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Non-finite input or a numerical routine that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// An operation's precondition does not hold for the given input.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A structural requirement on the input vector failed (e.g. too few spread indices).
    #[error("structural error: {0}")]
    Structural(String),
    /// The request exceeds an exact-enumeration or resource cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// Randomized rounding could not certify a sample within the attempt budget.
    #[error("certification failed after {attempts} attempts: {detail}")]
    Certification {
        attempts: usize,
        detail: String,
        best: Box<crate::rounding::RoundingResult>,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
