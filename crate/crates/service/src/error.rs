use std::path::PathBuf;

use bwsrank_core::ValidationError;
use thiserror::Error;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0} not found")]
    NotFound(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0}")]
    Rejected(#[from] ValidationError),

    #[error("annotator {annotator_id} already answered task {task_index}")]
    DuplicateSubmission {
        annotator_id: String,
        task_index: usize,
    },

    /// The task reached its quota and overshoot is off.
    #[error("task {0} already has all required votes")]
    TaskComplete(usize),

    #[error("project {0} already exists with different settings")]
    ProjectExists(String),

    #[error("{path}: line {line}: {message}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Core(#[from] bwsrank_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ServiceError {
    /// Stable machine-readable code carried in error bodies.
    pub fn code(&self) -> &'static str {
        use bwsrank_core::Error as E;
        match self {
            ServiceError::NotFound(_) => "NOT_FOUND",
            ServiceError::InvalidInput(_) => "INVALID_INPUT",
            ServiceError::Rejected(v) => v.code(),
            ServiceError::DuplicateSubmission { .. } => "DUPLICATE_SUBMISSION",
            ServiceError::TaskComplete(_) => "TASK_COMPLETE",
            ServiceError::ProjectExists(_) => "PROJECT_EXISTS",
            ServiceError::Core(E::Validation(v)) => v.code(),
            ServiceError::Core(E::Ingest { .. }) => "INGEST_ERROR",
            ServiceError::Core(E::DuplicateItem(_)) => "DUPLICATE_ITEM",
            ServiceError::Core(E::InvalidInput(_) | E::InvalidLabel(_)) => "INVALID_INPUT",
            ServiceError::Internal(_)
            | ServiceError::Core(_)
            | ServiceError::CorruptLog { .. }
            | ServiceError::Io(_)
            | ServiceError::Json(_) => "INTERNAL",
        }
    }

    /// HTTP status for the error.
    pub fn status(&self) -> u16 {
        match self.code() {
            "NOT_FOUND" => 404,
            "INVALID_INPUT" | "INGEST_ERROR" => 400,
            "DUPLICATE_SUBMISSION" | "TASK_COMPLETE" | "PROJECT_EXISTS" | "DUPLICATE_ITEM" => 409,
            "INTERNAL" => 500,
            _ => 422,
        }
    }
}
