use crate::dense::{truncated_svd, DenseTensor};
use crate::error::{violation, Result};

use super::ortho::{absorb_right, orthogonalize, shape};
use super::train::{Direction, Ortho, TensorTrain};

/// Per-step tolerance that keeps the total truncation error below `abs_tol`.
pub fn step_tolerance(abs_tol: f64, d: usize) -> f64 {
    if d <= 1 {
        abs_tol
    } else {
        abs_tol / ((d - 1) as f64).sqrt()
    }
}

/// TT-SVD rounding: Householder left sweep, then a right-to-left SVD sweep
/// with per-step tolerance `abs_tol / √(d−1)`. The result is right-orthogonal
/// and satisfies `‖X − X'‖ ≤ abs_tol`.
pub fn truncate(x: &TensorTrain, abs_tol: f64, max_rank: usize) -> Result<TensorTrain> {
    check_args(abs_tol, max_rank)?;
    let mut y = x.clone();
    let d = y.d();
    orthogonalize(&mut y, Direction::Left, d - 1)?;
    svd_sweep(&mut y, abs_tol, max_rank)?;
    Ok(y)
}

/// Like [`truncate`] with tolerance `rel_tol·‖X‖`.
pub fn truncate_relative(x: &TensorTrain, rel_tol: f64, max_rank: usize) -> Result<TensorTrain> {
    check_args(rel_tol, max_rank)?;
    let mut y = x.clone();
    let d = y.d();
    orthogonalize(&mut y, Direction::Left, d - 1)?;
    let nrm = y.core(d - 1).norm();
    svd_sweep(&mut y, rel_tol * nrm, max_rank)?;
    Ok(y)
}

fn check_args(tol: f64, max_rank: usize) -> Result<()> {
    if !(tol >= 0.0) || max_rank == 0 {
        return Err(violation(format!("truncation needs tol ≥ 0 and max_rank ≥ 1, got {tol}, {max_rank}")));
    }
    Ok(())
}

/// Right-to-left SVD sweep on a left-orthogonal train.
pub(crate) fn svd_sweep(y: &mut TensorTrain, abs_tol: f64, max_rank: usize) -> Result<()> {
    let d = y.d();
    let tol = step_tolerance(abs_tol, d);
    let cores = y.cores_mut_keep_marker();
    for k in (1..d).rev() {
        let (_, n, r1) = shape(&cores[k]);
        let svd = truncated_svd(cores[k].matrix(1), tol, max_rank);
        let r = svd.rank();
        cores[k] = DenseTensor::from_matrix(&svd.v.t().to_owned(), &[r, n, r1])?;
        cores[k - 1] = absorb_right(&cores[k - 1], &svd.us())?;
    }
    y.set_ortho(Ortho::Right(0), false);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::arith::{axpby_raw, norm};

    #[test]
    fn doubled_train_rounds_back() {
        let (x, _) = TensorTrain::random(&[3, 4, 3, 2], &[1, 2, 3, 2, 1], 4).unwrap();
        let z = axpby_raw(1.0, &x, 1.0, &x).unwrap();
        assert_eq!(z.ranks(), vec![1, 4, 6, 4, 1]);
        let t = truncate(&z, 1e-10 * norm(&z), usize::MAX).unwrap();
        assert_eq!(t.ranks(), x.ranks());
        let diff = axpby_raw(1.0, &t, -2.0, &x).unwrap();
        assert!(norm(&diff) <= 1e-10 * norm(&z));
        assert!(t.is_right_orthogonal());
    }

    #[test]
    fn huge_tolerance_gives_rank_one() {
        let (x, _) = TensorTrain::random(&[3, 3, 3], &[1, 3, 3, 1], 9).unwrap();
        let t = truncate(&x, 1e6, usize::MAX).unwrap();
        assert_eq!(t.ranks(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn rank_cap_is_respected() {
        let (x, _) = TensorTrain::random(&[4, 4, 4, 4], &[1, 4, 8, 4, 1], 2).unwrap();
        let t = truncate(&x, 0.0, 2).unwrap();
        assert!(t.max_rank() <= 2);
        assert!(truncate(&x, -1.0, 2).is_err());
    }
}
