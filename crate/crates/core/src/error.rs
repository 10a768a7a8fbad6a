use thiserror::Error;

/// Errors raised by the approximation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent p = {0} is outside the admissible range {1}")]
    InvalidExponent(f64, &'static str),

    #[error("grid function contains a non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("expected {expected} grid values for d = {dim}, J = {level}, got {actual}")]
    LengthMismatch {
        dim: usize,
        level: u32,
        expected: usize,
        actual: usize,
    },

    #[error("invalid dyadic cube: {0}")]
    InvalidCube(String),

    #[error("atom at level {atom_level} is not resolvable on a level-{grid_level} grid")]
    TooFine { atom_level: u32, grid_level: u32 },

    #[error("dimension mismatch: expected d = {expected}, got d = {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("atom {0} is not in the dictionary")]
    UnknownAtom(String),

    #[error("m = {m} exceeds the dictionary size {n}")]
    TooManyTerms { m: usize, n: usize },

    #[error("oracle cap exceeded: {0}")]
    OracleCap(String),

    #[error("inner solver did not converge after {iterations} iterations (gradient {gradient:e})")]
    NoConvergence { iterations: usize, gradient: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_exponent(p: f64, lower_open: f64, what: &'static str) -> Result<()> {
    if p.is_finite() && p > lower_open {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p, what))
    }
}
