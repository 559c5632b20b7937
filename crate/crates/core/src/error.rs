use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: non-finite value produced")]
    NonFinite { op: &'static str },

    #[error("backward requires a 1x1 loss, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },

    #[error("{0}: empty mask")]
    EmptyMask(&'static str),

    #[error("batch_norm needs at least 2 rows in training mode, got {0}")]
    BatchTooSmall(usize),

    #[error("row {row} is not a probability vector (sum {sum})")]
    NotProbability { row: usize, sum: f64 },

    #[error("node {node} out of range (n = {n})")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("class {class} has {have} nodes, {need} required")]
    InsufficientClass {
        class: usize,
        have: usize,
        need: usize,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", file.display())]
    Bundle {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("non-finite loss at epoch {epoch} (last finite: {last})")]
    Diverged { epoch: usize, last: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Shape { op, left, right }
    }

    pub(crate) fn bundle(file: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Bundle {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}
