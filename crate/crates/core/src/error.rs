use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dictionary covers only {found} of the {needed} requested pivot words")]
    Coverage { needed: usize, found: usize },

    #[error("record {id} is empty after normalization")]
    Dropped { id: String },

    #[error("train/test leakage: {count} held-out ids consulted while building training artifacts (first: {first})")]
    Leakage { count: usize, first: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
