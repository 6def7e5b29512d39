use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A row or record in an input file could not be parsed.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// Input violates a structural invariant (bin counts, mixed flags, bad magic).
    #[error("format error: {0}")]
    Format(String),

    /// Operation called on data in the wrong processing state.
    #[error("state error: {0}")]
    State(String),

    /// Bad argument to an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Model fitting could not proceed.
    #[error("training error: {0}")]
    Training(String),

    /// Experiment specification is inconsistent.
    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
