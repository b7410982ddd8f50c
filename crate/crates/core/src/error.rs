use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum GaError {
    #[error("algebra mismatch: {left} vs {right}")]
    AlgebraMismatch { left: String, right: String },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("grade {grade} out of range for a {dim}-dimensional base space")]
    GradeOutOfRange { grade: usize, dim: usize },

    #[error("multivector is not invertible (<x, x> = {0:e})")]
    NotInvertible(f64),

    #[error("operation requires a projective algebra G(p,0,1), got {0}")]
    NotProjective(String),

    #[error("operation requires a non-degenerate algebra, got {0}")]
    Degenerate(String),

    #[error("exponential series did not converge after {0} terms")]
    ExpNotConverged(usize),

    #[error("point at infinity (normalizer {0:e})")]
    PointAtInfinity(f64),

    #[error("point at infinity at token {token}")]
    TokenAtInfinity { token: usize },

    #[error("invalid versor: {0}")]
    InvalidVersor(String),

    #[error("slice too large: requires {required} dense entries, cap is {cap}")]
    SliceTooLarge { required: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, GaError>;
