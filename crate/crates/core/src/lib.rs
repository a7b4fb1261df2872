//! Numerical toolkit for the catability witness of single-mode bosonic states.
//!
//! Everything lives in a truncated Fock space ([`fock::FockSpace`]). On top of
//! the basic operators and states sit:
//!
//! * [`su11`]: the quadratic su(1,1) generators, closure and Casimir checks,
//!   phase rotations and parity sectors.
//! * [`catability`]: the witness operators and the normalized witness ξ,
//!   minimized over pure Gaussian references and over the mixing weight γ.
//! * [`decoherence`]: pure-loss channel, fidelity and Wigner diagnostics.
//! * [`greens`]: equal-time ring-lattice correlation matrices and Wick
//!   factorization, projected back onto a single mode.
//! * [`claimcheck`]: a registry of closed-form moment formulas, each compared
//!   against an independent numerical evaluation.
//! * [`oracle`]: brute-force reference evaluators used to generate golden
//!   fixtures.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catability;
pub mod claimcheck;
pub mod decoherence;
pub mod error;
pub mod fock;
pub mod format;
pub mod greens;
pub mod optim;
pub mod oracle;
pub mod su11;

pub use error::{CatError, Result};
pub use fock::{DensityOp, FockSpace, Ket, OpMatrix, C64};
