use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{column}` (found: {found})")]
    MissingColumn { column: String, found: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Domain(String),

    #[error("split `{split}` contains a single class; ROC-AUC needs both polarities")]
    SingleClass { split: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("feature space mismatch: model was trained on `{model}`, vectors come from `{vectors}`")]
    FeatureSpaceMismatch { model: String, vectors: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for evaluation-domain failures, 2 for I/O and configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::SingleClass { .. }
            | Error::DimensionMismatch { .. }
            | Error::FeatureSpaceMismatch { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
