//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the process exit codes used by the CLI:
/// usage/IO problems exit 1, domain and precondition violations exit 2,
/// and numerical failures (blow-ups, non-finite values, failed
/// convergence) exit 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller-side contract was violated (valid values exist but were not supplied).
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The computation itself failed (divergence, non-finite intermediate, lost accuracy).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error onto.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 1,
            Error::Domain(_) | Error::Precondition(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}
