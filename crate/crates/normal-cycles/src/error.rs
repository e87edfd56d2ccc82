use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    #[error("point is not on the required boundary: signed distance {signed_distance:.3e} exceeds tolerance {tolerance:.3e}")]
    NotOnBoundary {
        signed_distance: f64,
        tolerance: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("tolerance {requested:.3e} unachievable within budget (best gap {achieved:.3e})")]
    ToleranceUnachievable { requested: f64, achieved: f64 },

    #[error("solver failed to converge within {iterations} iterations: {context}")]
    SolverStalled { iterations: usize, context: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown form name: {0}")]
    UnknownForm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
