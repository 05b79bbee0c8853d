use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates its precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Malformed input data at a known line (1-based).
    #[error("line {line}: {message}")]
    InputLine { line: usize, message: String },

    /// Input data that is well-formed but inconsistent with the request.
    #[error("invalid input: {0}")]
    Input(String),

    /// Numerical routine failed to reach the requested accuracy.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
