use std::cell::Cell;

use crate::dense::{flops, qless_tsqr, solve_upper_right, DenseTensor, FlopKind, MatRef, Matrix};
use crate::error::Result;
use crate::tt::{absorb_left, left_step, shape, Direction, Ortho, TensorTrain};

/// Relative size of an `R` diagonal entry below which `R` counts as singular.
pub const SINGULAR_DIAGONAL: f64 = 1e-14;

/// Largest 1-norm condition number of `R` for which `X·R⁻¹` is accepted as
/// orthonormal; beyond it the Householder step is used instead.
pub const COND_LIMIT: f64 = 1e5;

thread_local! {
    static FALLBACKS: Cell<u64> = const { Cell::new(0) };
}

/// Number of fast-path steps on this thread that fell back to Householder.
pub fn fallback_count() -> u64 {
    FALLBACKS.with(|c| c.get())
}

pub(crate) fn note_fallback() {
    FALLBACKS.with(|c| c.set(c.get() + 1));
}

/// Outcome of a fast sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FastStats {
    pub fallbacks: usize,
}

/// Orthogonalization sweep using Q-less TSQR and `X·R⁻¹`.
///
/// Steps whose `R` is numerically singular (a diagonal entry below
/// `1e-14·‖R‖`) or too ill-conditioned for `X·R⁻¹` to stay orthonormal
/// (estimated `κ₁(R) > 1e5`) are redone with Householder QR. The sweep runs
/// to the last core ([`Direction::Left`]) or the first ([`Direction::Right`]).
pub fn fast_orthogonalize(x: &mut TensorTrain, direction: Direction) -> Result<FastStats> {
    match direction {
        Direction::Left => left_sweep(x),
        Direction::Right => {
            let mut r = x.reversed();
            let stats = left_sweep(&mut r)?;
            *x = r.reversed();
            Ok(stats)
        }
    }
}

fn left_sweep(x: &mut TensorTrain) -> Result<FastStats> {
    let d = x.d();
    let mut stats = FastStats::default();
    let cores = x.cores_mut_keep_marker();
    for k in 0..d - 1 {
        if !fast_left_step(cores, k)? {
            left_step(cores, k)?;
            stats.fallbacks += 1;
            note_fallback();
        }
    }
    x.set_ortho(Ortho::Left(d - 1), false);
    Ok(stats)
}

// Returns false when the step must be redone with Householder QR.
fn fast_left_step(cores: &mut [DenseTensor], k: usize) -> Result<bool> {
    let (r0, n, r1) = shape(&cores[k]);
    if r0 * n < r1 {
        return Ok(false);
    }
    let r = qless_tsqr(cores[k].matrix(2));
    let rn = r.frobenius_norm();
    if rn == 0.0 || (0..r1).any(|i| r[(i, i)].abs() < SINGULAR_DIAGONAL * rn) {
        return Ok(false);
    }
    if cond1_upper(&r) > COND_LIMIT {
        return Ok(false);
    }
    let q = solve_upper_right(cores[k].matrix(2), r.as_ref())?;
    cores[k] = DenseTensor::from_matrix(&q, &[r0, n, r1])?;
    cores[k + 1] = absorb_left(&r, &cores[k + 1])?;
    Ok(true)
}

/// `‖R‖₁·‖R⁻¹‖₁` for an invertible upper triangular matrix.
pub(crate) fn cond1_upper(r: &Matrix) -> f64 {
    let n = r.rows();
    flops::record(FlopKind::Contract, (n * n * n / 3) as u64);
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for l in i + 1..=j {
                s += r[(i, l)] * inv[(l, j)];
            }
            inv[(i, j)] = -s / r[(i, i)];
        }
    }
    norm1(r.as_ref()) * norm1(inv.as_ref())
}

fn norm1(m: MatRef<'_>) -> f64 {
    (0..m.cols()).map(|j| (0..m.rows()).map(|i| m.at(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
}
