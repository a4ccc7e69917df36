use thiserror::Error;

/// Errors raised by the laboratory's numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A probability vector or matrix is off the simplex.
    #[error("not a probability vector: {0}")]
    NotOnSimplex(String),

    /// A grid or resolution parameter is out of range.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A draw does not sit on the grid it was attributed to.
    #[error("draw {value} at index {index} is not a grid point")]
    OffGrid { index: usize, value: f64 },

    /// Generic argument validation failure.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cholesky factorization broke down even after the maximal jitter.
    #[error("cholesky failed at leading minor {minor} (pivot {pivot:e}, jitter {jitter:e})")]
    Cholesky { minor: usize, pivot: f64, jitter: f64 },

    /// Eigen-decomposition residual check failed.
    #[error("eigen-decomposition residual {residual:e} exceeds tolerance {tolerance:e}")]
    EigenResidual { residual: f64, tolerance: f64 },

    /// Tail approximation requested for a covariance with zero spectral radius.
    #[error("degenerate covariance: largest eigenvalue is zero (point-mass measure)")]
    DegenerateCovariance,

    /// Confidence level that yields an infinite radius.
    #[error("confidence level {0} gives an infinite radius")]
    InfiniteRadius(f64),

    /// A tabulated function violates the 1-Lipschitz condition.
    #[error("not 1-Lipschitz between breakpoints {left} and {right}: |df| = {df:e} > |dx| = {dx:e}")]
    NotLipschitz { left: usize, right: usize, df: f64, dx: f64 },

    /// Dual potentials violate feasibility `u_a + v_b <= c(a, b)`.
    #[error("dual infeasible at source {from} / target {to}: excess {excess:e}")]
    DualInfeasible { from: usize, to: usize, excess: f64 },

    /// Something that cannot happen for valid inputs did happen.
    #[error("internal error: {0}")]
    Internal(String),

    /// Input parsing failure.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error stems from bad user input rather than a defect.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
