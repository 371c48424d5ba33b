use thiserror::Error;

use crate::discretization::GridFunction;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {value} outside admissible range: {detail}")]
    OutOfRange { value: f64, detail: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("series did not converge within {terms} terms (last relative tail {tail:e})")]
    SeriesConvergence { terms: usize, tail: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("root bracket exhausted: {0}")]
    Bracket(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inner solver stopped after {iterations} iterations with residual {residual:e} (tolerance {tolerance:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
        partial: Box<GridFunction>,
    },

    #[error("flow step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors raised by a nonconverging inner solver, possibly
    /// wrapped in a step context.
    pub fn is_nonconvergence(&self) -> bool {
        match self {
            Error::NonConvergence { .. } => true,
            Error::Step { source, .. } => source.is_nonconvergence(),
            _ => false,
        }
    }
}
