use thiserror::Error;

use crate::rational::Rational;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid interval: lo {lo} > hi {hi}")]
    InvalidInterval { lo: Rational, hi: Rational },

    #[error("degenerate window [{0}, {0}]")]
    DegenerateWindow(Rational),

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(Rational),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("point {0} is not strictly inside the function domain")]
    AtDomainBoundary(Rational),

    #[error("unsolvable balance equation: target {target} outside [{min}, {max}]")]
    Unsolvable { target: Rational, min: Rational, max: Rational },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sets overlap in positive measure: {0}")]
    Overlap(String),

    #[error("invalid symbol path: {0}")]
    InvalidPath(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("construction failed: {0}")]
    Construction(String),
}
