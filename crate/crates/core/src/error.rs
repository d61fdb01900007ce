use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at {context}: expected {expected}, found {found}")]
    Shape {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("training diverged; last finite epoch was {last_finite_epoch}")]
    Diverged { last_finite_epoch: usize },

    #[error("no retrain reached the Rashomon set ({attempted} attempted)")]
    Exploration {
        attempted: usize,
        diagnostics: Vec<String>,
    },

    #[error(
        "contribution system needs N >= d mask vectors (N > d recommended): \
         have {available}, need at least {required}"
    )]
    InsufficientRetrains { available: usize, required: usize },

    #[error("raw contributions sum to {sum:e}, too small to normalize")]
    Normalization { sum: f64, raw: Vec<f64> },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset has no samples")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(context: impl Into<String>, expected: usize, found: usize) -> Error {
    Error::Shape {
        context: context.into(),
        expected,
        found,
    }
}
