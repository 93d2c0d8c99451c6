use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("eigenvalue iteration did not converge at index {index}")]
    NoConvergence { index: usize },
    #[error("checkerboard pattern violated at ({row}, {col}): {value:e}")]
    PatternViolation { row: usize, col: usize, value: f64 },
    #[error("spectral radius reached 1: eigenvalue {lambda} at index {index}")]
    SpectralRadiusExceeded { index: usize, lambda: f64 },
    #[error("quadrature error estimate {estimate:e} exceeds budget {budget:e}")]
    AccuracyBudget { estimate: f64, budget: f64 },
    #[error("only {count} samples fell in the kernel window (need 100)")]
    BandwidthTooSmall { count: usize },
    #[error("leading coefficient too small: {0:e}")]
    DegenerateLeadingCoefficient(f64),
    #[error("series overflow: term log-magnitude {0} exceeds 700")]
    Overflow(f64),
}

impl Error {
    /// True for errors caused by invalid arguments rather than numerical breakdown.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::NonSquare { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
