use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("unknown label {value:?} (expected positive, negative or neutral)")]
    Label { value: String },

    #[error("row {row} has empty text")]
    EmptyText { row: usize },

    #[error("cannot split: class {label} has {count} member(s), at least 2 required")]
    Split { label: Label, count: usize },

    #[error("invalid synthetic corpus spec: {0}")]
    Spec(String),

    #[error("vectorizer fit failed: {0}")]
    Fit(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    Divergence { epoch: usize, learning_rate: f64 },

    #[error(
        "{n} training samples exceed the kernel SVM cap of {cap}; subsample the training set first"
    )]
    Size { n: usize, cap: usize },

    #[error("boosting failed: {0}")]
    Boost(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sequence encoding error: {0}")]
    Encode(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("bad model file: {0}")]
    Format(String),

    #[error("tag cloud error: {0}")]
    Cloud(String),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
