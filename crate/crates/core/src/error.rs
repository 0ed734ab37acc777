use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between reading a CSV and raising an alarm.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("cannot parse {value:?} at row {row}, column {column}")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid dimension: {0}")]
    Dimension(String),

    #[error("degenerate variable: column {column} is constant")]
    DegenerateVariable { column: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient samples: need more than {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("training diverged at epoch {epoch} (loss {loss}); try a smaller learning rate")]
    Divergence { epoch: usize, loss: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Argument,
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Dimension(_) => ErrorClass::Argument,
            Error::Divergence { .. } | Error::Numeric(_) | Error::Degenerate(_) => {
                ErrorClass::Numeric
            }
            _ => ErrorClass::Data,
        }
    }
}
