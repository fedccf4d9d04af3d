//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched basis, vector, or matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Invalid input that fails a precondition (bad parameters, broken
    /// endpoint constraints, schema violations).
    #[error("validation error: {0}")]
    Validation(String),
    /// A numerical procedure failed (non-convergence, tolerance breach,
    /// non-unitary input, non-cyclic state).
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
