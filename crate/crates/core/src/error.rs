use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("record {record_id}: {reason}")]
    Validation { record_id: String, reason: String },

    #[error(
        "record {record_id} has {count} candidates but C = {max}; filter with max candidates first"
    )]
    TooManyCandidates {
        record_id: String,
        count: usize,
        max: usize,
    },

    #[error("embedding key not found: {0}")]
    KeyNotFound(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("embedding store: {0}")]
    StoreFormat(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("every candidate position is padded")]
    EmptyMask,

    #[error("target level {level} points at a padded or missing position")]
    PaddedTarget { level: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("length mismatch: {left} predictions vs {right} records")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(record_id: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            record_id: record_id.to_owned(),
            reason: reason.into(),
        }
    }
}
