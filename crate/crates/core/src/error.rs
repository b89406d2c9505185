use thiserror::Error;

/// Which hypothesis of the perturbation criterion an instance failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// The unperturbed family is not an orthogonal set of nonzero vectors.
    Orthogonality,
    /// `alpha` exceeds the smallest squared column norm of the unperturbed family.
    Alpha,
    /// The unperturbed family has no positive lower K-frame bound.
    LowerBound,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Hypothesis::Orthogonality => "first family is not an orthogonal set of nonzero vectors",
            Hypothesis::Alpha => "alpha must be positive and at most min ||phi_1j||^2",
            Hypothesis::LowerBound => "first family has no positive lower K-frame bound",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e} exceeds tolerance {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("operator is numerically zero")]
    ZeroOperator,

    #[error(
        "K is numerically zero; every Bessel sequence satisfies the K-frame inequality vacuously"
    )]
    ZeroK,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("exhaustive search needs {needed} weavings, cap is {cap}")]
    CapExceeded { needed: u128, cap: u64 },

    #[error("perturbation hypothesis violated: {0}")]
    HypothesesViolated(Hypothesis),

    #[error("invalid perturbation parameters: {0}")]
    InvalidParams(String),

    #[error("dimension {0} too small for this example (need at least 4)")]
    DimTooSmall(usize),

    #[error("invalid file: {0}")]
    InvalidFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
