//! Tensor-train (TT) linear solvers.
//!
//! The crate is layered bottom-up:
//!
//! * [`dense`]: column-major matrices, GEMM, Householder and Q-less TSQR,
//!   truncated SVD, shifted Cholesky and the thread-local flop counter.
//! * [`tt`]: tensor trains, TT operators, arithmetic, orthogonalization,
//!   SVD truncation and a binary file format.
//! * [`fast`]: orthogonality-exploiting addition, Q-less truncation and the
//!   reordered local operator used by the alternating solvers.
//! * [`solvers`]: TT-GMRES (with MGS or SIMGS orthogonalization and an
//!   optional rank-one two-sided preconditioner), TT-MALS and two TT-AMEn
//!   variants.
//! * [`problems`]: the convection-diffusion test operator and right-hand sides.

// `!(x > 0.0)` style tests are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod error;
pub mod fast;
pub mod problems;
pub mod solvers;
pub mod tt;

pub use error::{Error, Result};
