use crate::dense::{contract, householder_qr, DenseTensor, Matrix};
use crate::error::{violation, Result};

use super::train::{Direction, Ortho, TensorTrain};

/// Householder orthogonalization sweep that makes `center` the only
/// non-orthogonal core.
///
/// With [`Direction::Left`], cores `0..center` become left-orthogonal; with
/// [`Direction::Right`], cores `center+1..d` become right-orthogonal. Ranks
/// shrink where an unfolding has fewer rows than columns. Work already
/// recorded in the marker is skipped.
pub fn orthogonalize(x: &mut TensorTrain, direction: Direction, center: usize) -> Result<()> {
    let d = x.d();
    if center >= d {
        return Err(violation(format!("center {center} out of range for d = {d}")));
    }
    let exact = !x.is_approx_ortho();
    match direction {
        Direction::Left => {
            let start = match x.ortho() {
                Ortho::Left(k) if exact && k <= center => k,
                _ => 0,
            };
            for k in start..center {
                left_step(x.cores_mut_keep_marker(), k)?;
            }
            x.set_ortho(Ortho::Left(center), false);
        }
        Direction::Right => {
            let start = match x.ortho() {
                Ortho::Right(k) if exact && k >= center => k,
                _ => d - 1,
            };
            for k in (center + 1..=start).rev() {
                right_step(x.cores_mut_keep_marker(), k)?;
            }
            x.set_ortho(Ortho::Right(center), false);
        }
    }
    Ok(())
}

/// QR of core `k`'s left unfolding; `R` moves into core `k + 1`.
pub(crate) fn left_step(cores: &mut [DenseTensor], k: usize) -> Result<()> {
    let (r0, n, _) = shape(&cores[k]);
    let (q, r) = householder_qr(cores[k].matrix(2));
    let rank = q.cols();
    cores[k] = DenseTensor::from_matrix(&q, &[r0, n, rank])?;
    cores[k + 1] = absorb_left(&r, &cores[k + 1])?;
    Ok(())
}

/// LQ of core `k`'s right unfolding; `L` moves into core `k - 1`.
pub(crate) fn right_step(cores: &mut [DenseTensor], k: usize) -> Result<()> {
    let (_, n, r1) = shape(&cores[k]);
    let (q, r) = householder_qr(cores[k].matrix(1).t());
    let rank = q.cols();
    cores[k] = DenseTensor::from_matrix(&q.t().to_owned(), &[rank, n, r1])?;
    cores[k - 1] = absorb_right(&cores[k - 1], &r.t().to_owned())?;
    Ok(())
}

pub(crate) fn shape(c: &DenseTensor) -> (usize, usize, usize) {
    (c.dims()[0], c.dims()[1], c.dims()[2])
}

/// `M ×₁ core`: contracts the left rank index of `core` with the columns of `m`.
pub(crate) fn absorb_left(m: &Matrix, core: &DenseTensor) -> Result<DenseTensor> {
    let (_, n, r1) = shape(core);
    let out = contract(m.as_ref(), core.matrix(1))?;
    DenseTensor::from_matrix(&out, &[m.rows(), n, r1])
}

/// `core ×₃ M`: contracts the right rank index of `core` with the rows of `m`.
pub(crate) fn absorb_right(core: &DenseTensor, m: &Matrix) -> Result<DenseTensor> {
    let (r0, n, _) = shape(core);
    let out = contract(core.matrix(2), m.as_ref())?;
    DenseTensor::from_matrix(&out, &[r0, n, m.cols()])
}
