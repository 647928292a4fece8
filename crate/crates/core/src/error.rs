use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("rate {rate} outside the domain of {quantity}: {hint}")]
    Domain {
        quantity: &'static str,
        rate: f64,
        hint: &'static str,
    },

    /// A solver stopped without certifying its answer. `lower..=upper` brackets
    /// the optimum as far as the solver could tell; `best` is the value of the
    /// best feasible point it found.
    #[error("{solver} did not converge after {iterations} iterations (best {best}, bracket [{lower}, {upper}])")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        best: f64,
        lower: f64,
        upper: f64,
    },

    #[error("enumeration of {count} points exceeds the limit of {limit}")]
    Overflow { count: u128, limit: u128 },

    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
