//! Tensor trains, TT operators and the standard TT algorithms.

mod arith;
pub mod io;
mod operator;
mod ortho;
mod train;
mod truncate;

pub use arith::{axpby_raw, dot, norm};
pub use operator::{TtOperator, DENSE_OPERATOR_LIMIT};
pub use ortho::orthogonalize;
pub use train::{Direction, Ortho, RankClamp, TensorTrain, DENSE_ORACLE_LIMIT};
pub use truncate::{step_tolerance, truncate, truncate_relative};

pub(crate) use arith::{add_block, dot_step};
pub(crate) use operator::apply_core;
pub(crate) use ortho::{absorb_left, absorb_right, left_step, shape};
pub(crate) use truncate::svd_sweep;
