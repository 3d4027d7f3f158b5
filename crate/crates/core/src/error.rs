use thiserror::Error;

/// Errors produced by the fitting and testing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("column {0} has zero norm and cannot be normalized")]
    ZeroNormColumn(usize),

    #[error("index {index} out of range for p = {p}")]
    InvalidIndex { index: usize, p: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate descent did not converge after {iterations} sweeps (gap {gap:.3e}, target {target:.3e})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        target: f64,
    },

    #[error("least-squares refit on {set:?} is rank deficient")]
    Singular { set: Vec<usize> },

    #[error("lambda {lambda} is below the last computed knot {last_knot}")]
    OutOfRange { lambda: f64, last_knot: f64 },

    #[error("path supports {computable} test steps, {requested} requested")]
    PathTooShort { requested: usize, computable: usize },

    #[error("covariance statistic forms disagree: objective form {objective}, inner-product form {inner}")]
    FormMismatch { objective: f64, inner: f64 },

    #[error("degenerate fit: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for failures of the numerical routines, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Singular { .. }
                | Error::FormMismatch { .. }
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
