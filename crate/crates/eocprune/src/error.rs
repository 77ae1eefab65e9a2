use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no convergence: {msg} (last iterate {last})")]
    Convergence { msg: String, last: f64 },
    #[error("bracket failure: {0}")]
    BracketFailure(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },
    #[error("numeric overflow: {0}")]
    NumericOverflow(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
