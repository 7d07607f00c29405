//! Error taxonomy shared by every stage of the pipeline.
//!
//! Three families matter to callers: parameter errors (a caller handed us an
//! argument that can never work), format errors (bytes or text on disk do not
//! parse), and degenerate-data errors (the math is well-posed but this input
//! carries no usable information, e.g. a burst whose frequency trace never
//! changes sign). I/O errors pass through untouched.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Bytes or text that do not match the expected on-disk layout.
    #[error("format error: {0}")]
    Format(String),

    /// An argument outside the domain of the operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Structurally valid input that cannot yield a meaningful result.
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(format!("json: {e}"))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
