use std::path::PathBuf;

use thiserror::Error;

/// Errors shared across the estimation pipeline.
#[derive(Debug, Error)]
pub enum NpError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("index {index} out of range for sample of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid search specification: {0}")]
    InvalidSearchSpec(String),

    #[error("invalid bootstrap configuration: {0}")]
    InvalidBootstrapConfig(String),

    #[error("response has zero variance")]
    DegenerateResponse,

    #[error("smoother is degenerate at every design point (h = {h})")]
    Conditioning { h: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("model input out of domain: {0}")]
    Domain(String),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, NpError>;
