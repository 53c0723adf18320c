use thiserror::Error;

use crate::problem::SignVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("simplex exceeded {0} pivots without terminating")]
    IterationLimit(usize),
    #[error("non-finite value in LP data")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AvlpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("D must be entrywise nonnegative; D[{row}][{col}] = {value}")]
    NegativeRadius { row: usize, col: usize, value: f64 },
    #[error("sign vector has a zero at index {0}")]
    ZeroSign(usize),
    #[error("sign vector entries must lie in {{-1, 0, 1}}, got {0}")]
    BadSign(i8),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("LP for orthant {sign} failed: {source}")]
    OrthantLp {
        sign: SignVector,
        #[source]
        source: SimplexError,
    },
    #[error("point is not in the feasible set (max violation {0:e})")]
    NotFeasible(f64),
    #[error("row {row} is not active at the given point (residual {residual:e})")]
    NotActive { row: usize, residual: f64 },
    #[error("size limit exceeded: {0}")]
    Limit(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("verification failed: {0}")]
    Verification(String),
}
