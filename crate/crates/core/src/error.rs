use thiserror::Error;

use crate::sql::SqlError;
use crate::stats::StatsError;
use crate::storage::StorageError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("missing table {0}")]
    MissingTable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("query has {0} relations; at most 64 are supported")]
    TooManyRelations(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("selective improvement did not converge within {0} iterations")]
    NonTermination(usize),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
