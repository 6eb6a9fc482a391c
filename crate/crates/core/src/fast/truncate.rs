use crate::dense::{
    contract, gemm, householder_qr, qless_tsqr, solve_upper_right, truncated_svd, DenseTensor, MatMut, Matrix,
};
use crate::error::{violation, Result};
use crate::tt::{absorb_left, absorb_right, shape, step_tolerance, Ortho, TensorTrain};

use super::ortho::{note_fallback, FastStats};

/// Multiple of the step tolerance allowed for the a-posteriori check
/// `‖S̄² − X''ᵀX''‖_∞`.
pub const CHECK_FACTOR: f64 = 10.0;

/// Relative floor on singular values kept by the fast sweep; directions
/// below it carry no information at working precision.
const NOISE_FLOOR: f64 = 1e-15;

/// TT rounding without explicit Q factors.
///
/// A left sweep applies `R⁻¹` from Q-less TSQR (a pure gauge change, so any
/// loss of orthogonality is harmless at this point). The right-to-left sweep
/// takes small SVDs of TSQR factors of the right unfoldings and checks each
/// step with `‖S̄² − X''ᵀX''‖_∞ ≤ 10·tol·‖X‖`; failing steps are recomputed with
/// Householder QR and a full SVD. The error bound matches [`crate::tt::truncate`].
pub fn fast_truncate(x: &TensorTrain, abs_tol: f64, max_rank: usize) -> Result<(TensorTrain, FastStats)> {
    run(x, Tol::Abs(abs_tol), max_rank)
}

/// [`fast_truncate`] with tolerance `rel_tol·‖X‖`.
pub fn fast_truncate_relative(x: &TensorTrain, rel_tol: f64, max_rank: usize) -> Result<(TensorTrain, FastStats)> {
    run(x, Tol::Rel(rel_tol), max_rank)
}

#[derive(Clone, Copy)]
enum Tol {
    Abs(f64),
    Rel(f64),
}

fn run(x: &TensorTrain, tol: Tol, max_rank: usize) -> Result<(TensorTrain, FastStats)> {
    let t = match tol {
        Tol::Abs(t) | Tol::Rel(t) => t,
    };
    if !(t >= 0.0) || max_rank == 0 {
        return Err(violation(format!("truncation needs tol ≥ 0 and max_rank ≥ 1, got {t}, {max_rank}")));
    }
    let d = x.d();
    let mut y = x.clone();
    if d == 1 {
        y.set_ortho(Ortho::Right(0), false);
        return Ok((y, FastStats::default()));
    }
    let cores = y.cores_mut_keep_marker();
    for k in 0..d - 1 {
        gauge_step(cores, k)?;
    }
    let nrm = cores[d - 1].norm();
    let abs_tol = match tol {
        Tol::Abs(t) => t,
        Tol::Rel(t) => t * nrm,
    };
    let step = step_tolerance(abs_tol, d);
    let svd_tol = step.max(NOISE_FLOOR * nrm);
    let check = CHECK_FACTOR * step.max(1e-14 * nrm) * nrm;
    let mut stats = FastStats::default();
    for k in (1..d).rev() {
        if !fast_svd_step(cores, k, svd_tol, max_rank, check)? {
            stats.fallbacks += 1;
            note_fallback();
            standard_svd_step(cores, k, svd_tol, max_rank)?;
        }
    }
    y.set_ortho(Ortho::Right(0), true);
    Ok((y, stats))
}

// core_k ← core_k·R⁻¹, core_{k+1} ← R·core_{k+1} with R from TSQR. Tiny
// pivots are lifted so R stays invertible; the product is unchanged either way.
fn gauge_step(cores: &mut [DenseTensor], k: usize) -> Result<()> {
    let (r0, n, r1) = shape(&cores[k]);
    let mut r = qless_tsqr(cores[k].matrix(2));
    let floor = f64::EPSILON * r.frobenius_norm().max(f64::MIN_POSITIVE);
    for i in 0..r1 {
        if r[(i, i)].abs() < floor {
            r[(i, i)] = floor;
        }
    }
    let q = solve_upper_right(cores[k].matrix(2), r.as_ref())?;
    cores[k] = DenseTensor::from_matrix(&q, &[r0, n, r1])?;
    cores[k + 1] = absorb_left(&r, &cores[k + 1])?;
    Ok(())
}

// Right unfolding M = R̄ᵀQ̄ᵀ, R̄ᵀ = Ū S̄ V̄ᵀ. The new core is S̄⁻¹ŪᵀM and the left
// neighbour absorbs Ū S̄. Returns false if the orthogonality check fails,
// leaving both cores untouched.
fn fast_svd_step(cores: &mut [DenseTensor], k: usize, tol: f64, max_rank: usize, check: f64) -> Result<bool> {
    let (r0, n, r1) = shape(&cores[k]);
    let rbar = qless_tsqr(cores[k].matrix(1).t());
    let svd = truncated_svd(rbar.t(), tol, max_rank);
    let rank = svd.rank();
    if svd.s[rank - 1] <= 0.0 {
        return Ok(false);
    }
    let us = svd.us();
    let prev = absorb_right(&cores[k - 1], &us)?;
    let gram = contract(prev.matrix(2).t(), prev.matrix(2))?;
    let mut dev = 0.0f64;
    for j in 0..rank {
        for i in 0..rank {
            let target = if i == j { svd.s[i] * svd.s[i] } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    if !(dev <= check) {
        return Ok(false);
    }
    let mut ut = svd.u.t().to_owned();
    for (i, &s) in svd.s.iter().enumerate() {
        for j in 0..r0 {
            ut[(i, j)] /= s;
        }
    }
    let mut next = vec![0.0; rank * n * r1];
    gemm(1.0, ut.as_ref(), cores[k].matrix(1), 0.0, MatMut::col_major(&mut next, rank, n * r1))?;
    cores[k] = DenseTensor::from_vec(&[rank, n, r1], next)?;
    cores[k - 1] = prev;
    Ok(true)
}

// Householder re-orthogonalization of core k−1 followed by an explicit SVD of
// core k's right unfolding.
fn standard_svd_step(cores: &mut [DenseTensor], k: usize, tol: f64, max_rank: usize) -> Result<()> {
    let (p0, pn, _) = shape(&cores[k - 1]);
    let (q, t) = householder_qr(cores[k - 1].matrix(2));
    let m = absorb_left(&t, &cores[k])?;
    let (_, n, r1) = shape(&m);
    let svd = truncated_svd(m.matrix(1), tol, max_rank);
    let rank = svd.rank();
    cores[k] = DenseTensor::from_matrix(&svd.v.t().to_owned(), &[rank, n, r1])?;
    let prev: Matrix = contract(q.as_ref(), svd.us().as_ref())?;
    cores[k - 1] = DenseTensor::from_matrix(&prev, &[p0, pn, rank])?;
    Ok(())
}
