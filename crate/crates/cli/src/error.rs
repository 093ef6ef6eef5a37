use std::io;
use std::path::PathBuf;

use bwsrank_service::ServiceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: bwsrank_core::Error },

    #[error(transparent)]
    Core(#[from] bwsrank_core::Error),

    #[error(transparent)]
    Service(#[from] ServiceError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad flags or input files, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::File { .. } | CliError::Input { .. } => 2,
            CliError::Core(bwsrank_core::Error::Io(_)) => 1,
            CliError::Core(_) => 2,
            CliError::Service(e) if e.code() != "INTERNAL" => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
