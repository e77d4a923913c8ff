use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the embedding pipeline.
#[derive(Debug, Error)]
pub enum CamelError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("labels: {0}")]
    Labels(String),

    #[error("numerical divergence at iteration {iter}: mean |Y| = {mean_abs:e}")]
    Divergence { iter: usize, mean_abs: f64 },

    #[error("graph too large for the exact curvature oracle: {nodes} nodes (limit {limit})")]
    GraphTooLarge { nodes: usize, limit: usize },

    #[error("format error: {0}")]
    Format(String),
}

impl CamelError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CamelError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CamelError>;
