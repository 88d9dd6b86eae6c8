//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Errors raised by tomography operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    Domain(String),
    /// Two operands have incompatible dimensions.
    DimensionMismatch { expected: usize, got: usize },
    /// A matrix required to be Hermitian is not, beyond tolerance.
    NotHermitian,
    /// Input vectors are linearly dependent.
    RankDeficient,
    /// The projector set does not span the operator space.
    IncompleteSet,
    /// Too many Monte-Carlo sub-reconstructions failed to converge.
    McUnstable { excluded: usize, samples: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotHermitian => write!(f, "matrix is not Hermitian within tolerance"),
            Error::RankDeficient => write!(f, "input vectors are linearly dependent"),
            Error::IncompleteSet => {
                write!(f, "projector set is not informationally complete")
            }
            Error::McUnstable { excluded, samples } => write!(
                f,
                "{excluded} of {samples} Monte-Carlo sub-reconstructions failed to converge"
            ),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
