use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (events, trace files, vectors).
    #[error("rejected input: {0}")]
    Input(String),

    /// Invalid run, generator or model configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A slot, state or time index outside its valid range.
    #[error("out of range: {0}")]
    Range(String),

    /// Feature extraction for a file that has not aged one full slot yet.
    #[error("file {file} has age zero at slot {slot}")]
    AgeZero { file: u32, slot: usize },

    #[error("invalid replacement: {0}")]
    Replacement(String),

    /// Internal inconsistency such as mismatched vector dimensions.
    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
