use thiserror::Error;

use crate::monotone::MonotoneVerdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported set descriptor: {0}")]
    Unsupported(String),

    #[error("input has {size} elements, limit is {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("pair set is not cyclically monotone (cycle {:?}, deficit {:e})", .0.witness.as_ref().map(|w| &w.cycle), .0.witness.as_ref().map_or(0.0, |w| w.deficit))]
    NotCyclicallyMonotone(MonotoneVerdict),

    #[error("hypothesis violated: range is not strictly convex in direction {direction:?}")]
    HypothesisViolated { direction: Vec<f64> },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
