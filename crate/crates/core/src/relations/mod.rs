//! Relations among values: their representation and verification, the
//! generators (stuffle, reversal, linear shuffle, sum formulas, closed forms),
//! numerical discovery and dimension reports.

mod combination;
mod dims;
mod discover;
mod format;
mod forms;
mod stuffle;
mod suite;
mod sums;

pub use combination::*;
pub use dims::*;
pub use discover::*;
pub use format::*;
pub use forms::*;
pub use stuffle::*;
pub use suite::*;
pub use sums::*;

use thiserror::Error;

use crate::arith::ArithError;
use crate::index::IndexError;

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("products within the {0} family are not known to stay in its span; expand them in the ambient MMV algebra instead")]
    NotStuffleClosed(String),
    #[error("cannot stuffle {0} with {1}: both factors must be Euler sums or both mixed values, with the same star choice")]
    StuffleMismatch(String, String),
    #[error("malformed sum formula: {0}")]
    BadSumFormula(String),
    #[error("not enough primes: need {needed} discovery primes (product above 2^{bits}), window provides {have}; use a window of at least {window_needed} primes")]
    InsufficientPrimes {
        needed: usize,
        have: usize,
        bits: u64,
        window_needed: usize,
    },
    #[error("{0} could not be evaluated on enough primes")]
    Unevaluable(String),
    #[error("the sum constant is not the same at every prime: {0}")]
    InconsistentConstant(String),
    #[error("{0} is not in the span of the given constants over this window")]
    NotInSpan(String),
    #[error("cannot parse combination `{text}`: {reason}")]
    Parse { text: String, reason: String },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}
