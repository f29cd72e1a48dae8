//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("training failed: {message} (trace of {} steps attached)", trace.len())]
    TrainingFailure { message: String, trace: Vec<f64> },

    #[error("load error in {file}: {message}")]
    Load { file: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(expected: usize, actual: usize, context: &str) -> Self {
        Error::Dimension {
            expected,
            actual,
            context: context.to_string(),
        }
    }
}
