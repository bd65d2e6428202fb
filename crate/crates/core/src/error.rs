//! Crate-wide error type.

use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VgError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("h = {h} is outside the moment strip ({h1}, {h2})")]
    OutOfStrip { h: f64, h1: f64, h2: f64 },
    #[error("h = {h} is outside the domain ({lo}, {hi})")]
    OutOfDomain { h: f64, lo: f64, hi: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("branch failure: {0}")]
    BranchFailure(String),
    #[error("length {0} is not a power of two")]
    Length(usize),
    #[error("fractional parameter {0} must satisfy |frac| < 1")]
    FracRange(f64),
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFiniteSample(f64),
    #[error("invalid bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("target {target} is not bracketed by [{f_lo}, {f_hi}]")]
    NoBracket { target: f64, f_lo: f64, f_hi: f64 },
    #[error("horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("tail error: {0}")]
    Tail(String),
    #[error("Esscher equation not solvable: strip width {0} <= 1")]
    NotSolvable(f64),
    #[error("strip error: {0}")]
    Strip(String),
    #[error("invalid market data: {0}")]
    Market(String),
}

impl VgError {
    /// True for errors caused by invalid inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            VgError::InvalidParams(_)
                | VgError::OutOfStrip { .. }
                | VgError::OutOfDomain { .. }
                | VgError::Domain(_)
                | VgError::Length(_)
                | VgError::FracRange(_)
                | VgError::Bracket { .. }
                | VgError::Horizon(_)
                | VgError::Grid(_)
                | VgError::NotSolvable(_)
                | VgError::Strip(_)
                | VgError::Market(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, VgError>;
