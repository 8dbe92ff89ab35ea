use thiserror::Error;

use crate::pattern::PatternError;

/// Errors raised by the model, optimizer and oracle layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid volume fractions: {0}")]
    InvalidFractions(String),

    #[error("long-range strength must be positive, got {0}")]
    NonPositiveStrength(f64),

    #[error("reduced matrix is not symmetric positive semi-definite (eigenvalues {0:?})")]
    IndefiniteReduced([f64; 2]),

    #[error("interaction matrix rows do not sum to zero (residual {0:e})")]
    RowSumResidual(f64),

    #[error("invalid pattern: {0}")]
    Pattern(#[from] PatternError),

    #[error("invalid widths: {0}")]
    Widths(String),

    #[error("invalid model parameters: {0}")]
    Params(String),

    #[error("argument out of range: {0}")]
    Domain(String),

    #[error("size cap exceeded: {what} = {value} (cap {cap})")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("optimizer did not converge for {pattern} after {iterations} iterations (stationarity {residual:e})")]
    NotConverged {
        pattern: String,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid arrangement: {0}")]
    Arrangement(String),
}

impl Error {
    /// True for errors caused by invalid input, as opposed to numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NotConverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
