use std::path::PathBuf;

use thiserror::Error;

use crate::oracle::QueryCounts;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("line {line}: duplicate edge ({upper}, {lower})")]
    DuplicateEdge { line: usize, upper: u64, lower: u64 },

    #[error("invalid cache file: {0}")]
    BadCache(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(&'static str),

    #[error("graph too large for brute-force enumeration ({upper} x {lower}, limit {limit})")]
    TooLarge {
        upper: usize,
        lower: usize,
        limit: usize,
    },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("vertex {0} does not exist")]
    InvalidVertex(String),

    #[error("neighbor index {index} out of range for degree {degree}")]
    IndexOutOfRange { index: usize, degree: usize },

    #[error("vertex-pair query needs one upper and one lower vertex")]
    SameSidePair,

    #[error("query budget exhausted after {} queries", counts.total)]
    BudgetExhausted { counts: QueryCounts },

    #[error("time limit reached after {} queries", counts.total)]
    TimeLimitReached { counts: QueryCounts },

    #[error("unknown dataset: {0}")]
    UnknownDataset(String),

    #[error("ground truth unavailable for {0}")]
    TruthUnavailable(String),
}

impl Error {
    /// True for the recoverable interruptions raised by the query meter.
    pub fn is_interrupt(&self) -> bool {
        matches!(
            self,
            Error::BudgetExhausted { .. } | Error::TimeLimitReached { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
