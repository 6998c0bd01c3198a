use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A random walk exceeded its step budget; the result would be
    /// unreliable, so the sample is aborted instead of silently dropped.
    #[error("walk step budget exhausted after {0} steps")]
    StepBudgetExhausted(u64),

    #[error("marked vertex {0} is not connected to the root")]
    MissingMarkedVertex(u32),

    #[error("malformed contour path: {0}")]
    MalformedPath(String),

    #[error("empty sample")]
    EmptySample,

    #[error("integer overflow while counting ({0})")]
    CountOverflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
