use thiserror::Error;

use crate::objective::ConvexMode;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a {required} convex term")]
    WrongMode { required: ConvexMode },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("prox evaluation failed: {0}")]
    Prox(String),

    #[error("v0 is not a certified subgradient of the convex term at x0")]
    UncertifiedVelocity,

    #[error("step size {h:e} rejected and next step would fall below h_min = {h_min:e}")]
    StepTooSmall { h: f64, h_min: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sample index {index} out of range ({len} samples)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("trajectory diverged")]
    Diverged,

    #[error("empty grid")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;
