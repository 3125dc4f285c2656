use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation, generation and expectation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    /// A caller-supplied parameter is outside its admissible range. The
    /// message names the violated bound.
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("perfect fit (R^2 = 1): F statistic undefined")]
    PerfectFit,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True when the error reflects a caller-side parameter/configuration
    /// mistake rather than a data or numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::OutOfRange(_) | Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
