use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the attribution pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("attribution needs at least one input variable")]
    NoInputs,

    #[error("exact attribution over {size} variables exceeds the exact limit of {limit}; use a sampling budget or raise the limit")]
    OverExactLimit { size: usize, limit: usize },

    #[error("mechanism `{label}` failed: {message}")]
    Evaluation { label: String, message: String },

    #[error("mechanism `{label}` returned a non-finite value {value}")]
    NonFinite { label: String, value: f64 },

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("noise inversion at node `{node}` does not round-trip (residual {residual:e})")]
    Invertibility { node: String, residual: f64 },

    #[error("invalid causal model: {0}")]
    InvalidModel(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("model fitting failed: {0}")]
    Fit(String),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("cannot parse `{value}` at row {row}, column `{column}`")]
    Cell { row: usize, column: String, value: String },

    #[error("duplicate row for unit {id} in year {year}")]
    DuplicateRow { id: String, year: i64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{0}")]
    Data(String),

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("{path}: {source}")]
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

impl Error {
    pub(crate) fn mismatch(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            actual,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
