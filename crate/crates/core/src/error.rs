use thiserror::Error;

/// Failure modes shared by every solver component.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate density: P0 = {0}")]
    DegenerateDensity(f64),
    #[error("grid mismatch: expected {expected} values, found {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("CFL violation: dt = {dt} exceeds limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("stability violation: dt = {dt} exceeds c*eps^2 = {limit}")]
    StabilityViolation { dt: f64, limit: f64 },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mismatched series: {0}")]
    MismatchedSeries(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad input rather than by the solver.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::InvalidParameter(_) | Self::Parse { .. } | Self::GridMismatch { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
