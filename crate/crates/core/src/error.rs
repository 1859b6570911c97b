use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A file header or record layout does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A single input row could not be accepted.
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    /// An operation was given input outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A tuning parameter is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A serialized artifact is malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    /// An experiment references something that does not exist.
    #[error("experiment spec error: {0}")]
    Spec(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
