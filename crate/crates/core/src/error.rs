use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("coordinate {index} out of domain: {value}")]
    CoordinateDomain { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed payload: {field}")]
    MalformedPayload { field: &'static str },

    #[error("complexity budget {budget} bits exceeds enumeration cap of {cap} bits")]
    BudgetTooLarge { budget: u32, cap: u32 },

    #[error("no codebook entry fits the budget")]
    EmptyCodebook,

    #[error("no candidate satisfies the measurements within tolerance {delta}")]
    NoFeasibleCandidate { delta: f64 },

    #[error("power iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("matrix of {rows}x{cols} exceeds the {cap}-entry memory cap")]
    SizeOverflow { rows: usize, cols: usize, cap: usize },

    #[error("difference set has {size} elements, cap is {cap}")]
    DifferenceSetTooLarge { size: u64, cap: u64 },

    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
