use crate::UserId;
use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resource grid: {0}")]
    InvalidGrid(String),

    #[error("invalid multipath model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite channel gain for user {user} at subcarrier {index}")]
    NonFiniteGain { user: UserId, index: usize },

    #[error("degenerate channel for user {user}: block {block} has zero magnitude")]
    DegenerateBlock { user: UserId, block: usize },

    #[error("degenerate ratio at block {block}: values must be finite and positive")]
    DegenerateRatio { block: usize },

    #[error("negative SNR {value} at block {block}")]
    NegativeSnr { block: usize, value: f64 },

    #[error("grid mismatch between users {a} and {b}")]
    GridMismatch { a: UserId, b: UserId },

    #[error("no noise power configured for user {0}")]
    MissingNoise(UserId),

    #[error("allocation references unknown user {0}")]
    UnknownUser(UserId),

    #[error("at least {required} users required, got {actual}")]
    TooFewUsers { required: usize, actual: usize },

    #[error("enumeration guard: {blocks} blocks exceeds the limit of {limit}")]
    GuardRefused { blocks: usize, limit: usize },

    #[error("split mismatch: allocation gives user 1 {ca} blocks, oracle {oracle}")]
    SplitMismatch { ca: usize, oracle: usize },

    #[error("{path}:{line}: {message}")]
    Trace {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("trace {path}: user {user} has {actual} subcarriers, expected {expected}")]
    TraceLength {
        path: PathBuf,
        user: UserId,
        expected: usize,
        actual: usize,
    },

    #[error("trace {path}: duplicate entry for user {user} subcarrier {index} at line {line}")]
    TraceDuplicate {
        path: PathBuf,
        line: u64,
        user: UserId,
        index: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by a zero or otherwise unusable channel value.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateBlock { .. } | Error::DegenerateRatio { .. }
        )
    }
}
