use std::path::PathBuf;

use carespace_ingest::IngestError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A run configuration or scenario spec is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// Input data could not be read or failed validation.
    #[error("data error: {0}")]
    Data(String),

    /// Data loaded but the analysis produced nothing usable.
    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Analysis(_) => 4,
        }
    }

    pub(crate) fn data(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
