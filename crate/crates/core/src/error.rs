use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (supported: 3..=8)")]
    UnsupportedDimension(usize),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point is not in the domain")]
    NotInDomain,

    #[error("point is within {distance:e} of the boundary (guard {guard:e})")]
    TooCloseToBoundary { distance: f64, guard: f64 },

    #[error("perturbation too large: C2 norm bound {0} must be below 1/2")]
    PerturbationTooLarge(f64),

    #[error("quadrature did not reach the target: relative error {achieved:e} > {target:e}")]
    QuadratureTarget { achieved: f64, target: f64 },

    #[error("integrand does not decay fast enough to be integrable")]
    NonIntegrable,

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("mountain-pass path collapsed onto a single minimum")]
    PathCollapse,

    #[error("degenerate domain: {0}")]
    Degenerate(String),

    #[error("bubble centers coincide")]
    CoincidentCenters,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than by numerics.
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            Error::QuadratureTarget { .. } | Error::NoConvergence(_) | Error::PathCollapse
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
