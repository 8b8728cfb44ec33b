//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Expression text failed to parse or violated a grammar restriction.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// An arithmetic result left the finite range.
    #[error("non-finite interval")]
    NonFinite,

    /// Interval endpoints out of order or invalid.
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    /// Vector operands of different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Point dimension does not match the problem dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An expression references the constraint parameter but none was supplied.
    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    /// Objective interval order violated at an evaluation point.
    #[error("interval order violated at evaluation point: lower {lower} > upper {upper}")]
    IntervalOrderViolated { lower: f64, upper: f64 },

    /// Problem-file validation failure.
    #[error("problem validation: {0}")]
    Validation(String),

    /// A point lies outside the constraint region where membership is required.
    #[error("point is not in omega")]
    PointOutsideOmega,

    /// No feasible starting point supplied to a descent routine.
    #[error("no feasible start")]
    NoFeasibleStart,

    /// A certificate does not have the shape the system requires.
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),

    /// A witness fails the relation system it claims to satisfy.
    #[error("malformed witness: {0}")]
    MalformedWitness(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
