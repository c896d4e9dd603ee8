//! Error type shared by every module in this crate.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong in this crate.
///
/// Numerical routines distinguish between arguments that violate a documented
/// precondition ([`Error::Domain`]), inputs that are structurally fine but on
/// which the requested quantity is undefined ([`Error::Degenerate`]), and
/// out-of-range indices ([`Error::Index`]). Training additionally reports a
/// non-finite loss as [`Error::Divergence`].
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    Domain(String),
    /// An index was outside the valid range.
    Index { index: usize, len: usize },
    /// The input is valid but the requested quantity is undefined on it
    /// (e.g. the Pearson correlation of a constant grid).
    Degenerate(String),
    /// Training produced a non-finite loss at the given epoch.
    Divergence { epoch: usize },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Index { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::Divergence { epoch } => {
                write!(f, "training diverged: non-finite loss at epoch {epoch}")
            }
        }
    }
}

impl core::error::Error for Error {}
