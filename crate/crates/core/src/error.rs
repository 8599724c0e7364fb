use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected:?}, got {actual:?}")]
    Shape {
        op: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{op}: window longer than signal ({window} > {len})")]
    WindowTooLong {
        op: &'static str,
        window: usize,
        len: usize,
    },

    #[error("signal too short: {op} needs at least {min} samples, got {len}")]
    SignalTooShort { op: &'static str, min: usize, len: usize },

    #[error("{0}: backward called without a cached forward pass")]
    MissingCache(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("rank deficient: effective rank {rank} of {dim}")]
    RankDeficient { rank: usize, dim: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("dataset error in {entry}: {reason}")]
    Dataset { entry: String, reason: String },

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, expected: &[usize], actual: &[usize]) -> Self {
        Error::Shape {
            op,
            expected: expected.to_vec(),
            actual: actual.to_vec(),
        }
    }
}
