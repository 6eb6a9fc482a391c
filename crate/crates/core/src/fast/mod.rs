//! Optimized tensor-train building blocks: orthogonality-exploiting addition,
//! Q-less orthogonalization and truncation, a Cholesky-based orthogonal
//! complement, and the reordered local operator of alternating solvers.

mod axpby;
mod complement;
mod local_op;
mod ortho;
mod truncate;

pub use axpby::{axpby_trunc, axpby_trunc_ortho};
pub use complement::{complement_with_coefficients, stable_orthogonal_complement};
pub use local_op::{local_apply, prepare_local_op, LocalOp, PAD_THRESHOLD};
pub use ortho::{fallback_count, fast_orthogonalize, FastStats, COND_LIMIT, SINGULAR_DIAGONAL};
pub use truncate::{fast_truncate, fast_truncate_relative, CHECK_FACTOR};
