//! Crate-wide error type.

/// Errors produced by chart construction, parsing, and the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("chart mismatch: expected `{expected}`, got `{found}`")]
    ChartMismatch { expected: String, found: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error(
        "rank of {context} is not constant over the sample box: \
         rank {rank_a} at {point_a:?} vs rank {rank_b} at {point_b:?}"
    )]
    RankInstability {
        context: String,
        rank_a: usize,
        point_a: Vec<f64>,
        rank_b: usize,
        point_b: Vec<f64>,
    },

    #[error("degenerate {what} at {point:?}")]
    Degenerate { what: String, point: Vec<f64> },

    #[error("inadmissible covector at {point:?} (residual {residual:.3e})")]
    Inadmissible { point: Vec<f64>, residual: f64 },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("symmetry action failure: {0}")]
    Action(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
