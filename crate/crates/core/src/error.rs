use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input shape is unusable (bad eps, mismatched grids, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A value violated a documented invariant at construction or load time.
    #[error("validation error: {0}")]
    Validation(String),

    /// A cluster was too small to fit surfaces to.
    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    /// Internal contract violation, e.g. centroid of an empty cluster.
    #[error("logic error: {0}")]
    Logic(String),

    /// Malformed input text.
    #[error("parse error in {source_name}: {message}")]
    Parse {
        source_name: String,
        message: String,
    },

    /// A persisted file carries a schema version this build does not read.
    #[error("schema version mismatch in {path}: expected {expected}, found {found}")]
    VersionMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the environment rather than by user input.
    pub fn is_environmental(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
