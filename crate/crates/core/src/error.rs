use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus mismatch: expected {expected}, got {actual}")]
    ModulusMismatch { expected: usize, actual: usize },

    #[error("frame set is empty")]
    EmptyFrameSet,

    #[error("duplicate time-frequency index ({k}, {ell})")]
    DuplicateIndex { k: usize, ell: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("not a frame: smallest squared singular value {sigma_sq_min:e} is below rank threshold {threshold:e}")]
    NotAFrame { sigma_sq_min: f64, threshold: f64 },

    #[error("request exceeds budget: estimated {estimate:.3e} operations, budget {budget:.3e}")]
    BudgetExceeded { estimate: f64, budget: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
