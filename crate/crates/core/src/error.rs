use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while loading data, fitting models or running sweeps.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: rating {value} outside 1..=5")]
    RatingRange { line: usize, value: i64 },

    #[error("line {line}: duplicate rating for user {user}, item {item}")]
    Duplicate { line: usize, user: u32, item: u32 },

    #[error("user {user} has {available} candidate items, fewer than k = {k}")]
    TooFewCandidates { user: u32, available: usize, k: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
