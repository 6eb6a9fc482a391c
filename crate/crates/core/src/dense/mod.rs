//! Dense linear algebra kernels on column-major matrices.

mod cholesky;
pub mod flops;
mod gemm;
mod matrix;
mod qr;
mod svd;
mod tensor;

pub use cholesky::{cholesky_spd, solve_lower, solve_lower_transposed, solve_upper_right, Cholesky};
pub use flops::{FlopKind, FlopTally};
pub use gemm::{axpy, contract, dot, gemm, norm2};
pub use matrix::{padded_stride, MatMut, MatRef, Matrix};
pub use qr::{householder_qr, householder_r, qless_tsqr};
pub use svd::{select_rank, truncated_svd, Svd};
pub use tensor::{tensordot, DenseTensor};

pub(crate) use svd::svd_full;
