//! Finite multiple mixed values: evaluation modulo primes, the word calculus
//! behind linear shuffle relations, and numerical relation discovery.

pub mod arith;
pub mod eval;
pub mod index;
pub mod lattice;
pub mod relations;
pub mod words;

pub use arith::{AdeleSample, ConstantMonomial, Prime, PrimeWindow, Residue};
pub use eval::{eval_mod, naive_eval, window_eval};
pub use index::{Family, Index, SignedComposition, ValueRef};
