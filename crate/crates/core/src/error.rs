use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no data ({skipped} line(s) skipped)")]
    NoData { skipped: u64 },

    #[error("invalid character at offset {offset}")]
    InvalidCharacter { offset: u64 },

    #[error("bit index {index} out of range for sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value {0} in real series")]
    NonFinite(f64),

    #[error("insufficient data for pairwise discretization")]
    InsufficientData,

    #[error("unknown discretization method {0} (expected 1..5)")]
    UnknownMethod(u8),

    #[error("window longer than sequence (window {window}, sequence {len})")]
    WindowTooLong { window: usize, len: usize },

    #[error("window length {window} exceeds the supported maximum of {max}")]
    WindowUnsupported { window: usize, max: usize },

    #[error("window length must be at least 1")]
    EmptyWindow,

    #[error("history longer than sequence (history {history}, sequence {len})")]
    HistoryTooLong { history: usize, len: usize },

    #[error("history length {history} exceeds the supported maximum of {max}")]
    HistoryUnsupported { history: usize, max: usize },

    #[error("sequence too short: need at least {min} bits, got {len}")]
    SequenceTooShort { min: usize, len: usize },

    #[error("polynomial order must be ≥ 1")]
    InvalidPolynomialOrder,

    #[error("profile too short (scheme needs h_max {needed}, profile has {available})")]
    ProfileTooShort { needed: usize, available: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid source spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
