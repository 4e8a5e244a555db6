use thiserror::Error;

use crate::efg::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(ValidationReport),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("plan mismatch: {0}")]
    PlanMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
