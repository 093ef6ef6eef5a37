use thiserror::Error;

use crate::judgments::ValidationError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A vote failed one of the selection checks.
    #[error("invalid vote: {0}")]
    Validation(#[from] ValidationError),

    /// A vote refers to a task or item the design does not know about.
    #[error("invalid vote: {0}")]
    InvalidVote(String),

    #[error("scales are not comparable: {0}")]
    IncomparableScales(String),

    #[error("invalid label {0:?}: expected one of A1, A2, B1, B2, C1, C2")]
    InvalidLabel(String),

    #[error("infeasible staffing: {workers} workers cannot supply {votes_per_task} distinct votes per task")]
    InfeasibleStaffing { workers: usize, votes_per_task: usize },

    /// Malformed input file; `line` is 1-based and counts the header.
    #[error("line {line}: {message}")]
    Ingest { line: usize, message: String },

    #[error("duplicate item id {0:?}")]
    DuplicateItem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
