use alloc::string::String;

use crate::metricdsl::ParseError;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("jet dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("jet order exhausted: need {needed}, have {available}")]
    OrderExhausted { needed: usize, available: usize },
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown catalog metric `{0}`")]
    UnknownMetric(String),
    #[error("parallel transport failed: {0}")]
    Transport(String),
    #[error("certification failed: {what} (residual {residual:e})")]
    Certification { what: String, residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn exhausted(needed: usize, available: usize) -> Error {
    Error::OrderExhausted { needed, available }
}
