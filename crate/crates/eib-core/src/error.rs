use std::path::PathBuf;
use thiserror::Error;

/// Errors surfaced by the core library.
///
/// The pipeline maps these onto process exit codes, so the split between
/// validation problems, missing inputs, and numerical divergence matters.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("empty text: {0}")]
    EmptyText(String),

    #[error("{path}:{line}: schema violation: {msg}")]
    Schema {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("missing input: {0}")]
    MissingInput(PathBuf),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("digest mismatch for {path}: manifest says {expected}, file hashes to {actual}")]
    DigestMismatch {
        path: String,
        expected: String,
        actual: String,
    },

    #[error("training diverged at epoch {epoch} ({detail}); last good state is from epoch {last_good_epoch}")]
    Diverged {
        epoch: usize,
        detail: String,
        last_good_epoch: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
