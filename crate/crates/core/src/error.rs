use thiserror::Error;

/// Errors raised by the library. Diagnostics never error; they return reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("conflicting prices {first} and {second} for the same quality")]
    PriceConflict { first: f64, second: f64 },

    #[error("twist condition violated: grad_z zeta coincides for eps {eps_a:?} and {eps_b:?} at z {z:?}")]
    TwistViolation {
        eps_a: Vec<f64>,
        eps_b: Vec<f64>,
        z: Vec<f64>,
    },

    #[error("twist condition violated: {0}")]
    NotSingleCrossing(String),

    #[error("{fraction:.4} of traded pairs have a boundary argmax (threshold {threshold}); enlarge the quality grid")]
    GridBoundary { fraction: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
