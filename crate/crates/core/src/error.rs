use core::fmt;

/// Errors raised by the library for invalid inputs or broken invariants.
///
/// Protocol aborts (zero key) are not errors; they are reported through
/// [`KeyRateResult::aborted`](crate::engine::KeyRateResult).
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    Domain(&'static str),
    /// A configuration value is invalid; carries the field name.
    InvalidParameter(&'static str),
    /// Exact summation requested beyond the supported size.
    TooLarge(&'static str),
    /// The number of tail-bound invocations does not match the secrecy budget.
    BudgetMismatch {
        sampling: u32,
        chernoff: u32,
        inverse_chernoff: u32,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidParameter(field) => write!(f, "invalid parameter `{field}`"),
            Error::TooLarge(msg) => write!(f, "input too large: {msg}"),
            Error::BudgetMismatch {
                sampling,
                chernoff,
                inverse_chernoff,
            } => write!(
                f,
                "secrecy budget mismatch: {sampling} sampling, {chernoff} Chernoff, {inverse_chernoff} inverse-Chernoff bounds used"
            ),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::error::Error for Error {}
