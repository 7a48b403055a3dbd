use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong shape for the layer it was fed to.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: String,
        got: String,
    },

    /// A forward trace, gradient or optimizer state does not belong to the
    /// network it is being used with.
    #[error("inconsistent state: {0}")]
    Consistency(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cannot fit scaler: feature `{feature}` has zero variance")]
    ZeroVariance { feature: &'static str },

    #[error("cannot fit scaler: {0}")]
    Fit(String),

    #[error("cannot split {n} records: at least 10 are required")]
    Split { n: usize },

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Validation {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("training diverged at epoch {epoch}, batch {batch}: {message}")]
    Diverged {
        epoch: usize,
        batch: usize,
        message: String,
    },

    #[error("ablation row `{label}` failed: {source}")]
    Ablation {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(
        context: impl Into<String>,
        expected: impl ToString,
        got: impl ToString,
    ) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
