use std::path::PathBuf;

use carespace_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: file not found")]
    MissingFile { path: PathBuf },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{path}: schema violation: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{path}: declared rate {declared_hz} Hz but samples are spaced for {observed_hz:.3} Hz")]
    RateMismatch {
        path: PathBuf,
        declared_hz: f64,
        observed_hz: f64,
    },

    #[error("{path}: {source}")]
    Core {
        path: PathBuf,
        #[source]
        source: CoreError,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            IngestError::MissingFile { path }
        } else {
            IngestError::Io { path, source }
        }
    }

    pub(crate) fn core(path: impl Into<PathBuf>, source: CoreError) -> Self {
        IngestError::Core {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, IngestError>;
