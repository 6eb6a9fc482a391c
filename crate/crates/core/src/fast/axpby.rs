use crate::dense::{contract, gemm, householder_qr, DenseTensor, MatMut, Matrix};
use crate::error::{mismatch, violation, Result};
use crate::tt::{absorb_left, add_block, axpby_raw, shape, svd_sweep, Ortho, TensorTrain};

use super::truncate::fast_truncate;

/// `trunc(αX + βY)` for two left-orthogonal (or two right-orthogonal) trains.
///
/// The sum is assembled directly in left-orthogonal form: each core of `X`
/// is kept, and only the part of `Y` orthogonal to it is factorized, which
/// needs a QR of width `rank(Y)` instead of `rank(X) + rank(Y)`. A closing SVD
/// sweep truncates with the usual `abs_tol / √(d−1)` per step. Right-orthogonal
/// inputs give a left-orthogonal result and vice versa.
pub fn axpby_trunc_ortho(
    alpha: f64,
    x: &TensorTrain,
    beta: f64,
    y: &TensorTrain,
    abs_tol: f64,
    max_rank: usize,
) -> Result<TensorTrain> {
    if x.dims() != y.dims() {
        return Err(mismatch(format!("mode sizes {:?} vs {:?}", x.dims(), y.dims())));
    }
    if !(abs_tol >= 0.0) || max_rank == 0 {
        return Err(violation("truncation needs tol ≥ 0 and max_rank ≥ 1"));
    }
    if x.is_left_orthogonal() && y.is_left_orthogonal() {
        left_orthogonal_sum(alpha, x, beta, y, abs_tol, max_rank)
    } else if x.is_right_orthogonal() && y.is_right_orthogonal() {
        let z = left_orthogonal_sum(alpha, &x.reversed(), beta, &y.reversed(), abs_tol, max_rank)?;
        Ok(z.reversed())
    } else {
        Err(violation("both trains must be left-orthogonal or both right-orthogonal"))
    }
}

/// Truncated `αX + βY` through the cheapest applicable fast path: the
/// orthogonality-exploiting sum when the markers agree, otherwise an
/// untruncated sum followed by [`fast_truncate`].
pub fn axpby_trunc(
    alpha: f64,
    x: &TensorTrain,
    beta: f64,
    y: &TensorTrain,
    abs_tol: f64,
    max_rank: usize,
) -> Result<TensorTrain> {
    let both_left = x.is_left_orthogonal() && y.is_left_orthogonal();
    let both_right = x.is_right_orthogonal() && y.is_right_orthogonal();
    if x.d() > 1 && (both_left || both_right) {
        return axpby_trunc_ortho(alpha, x, beta, y, abs_tol, max_rank);
    }
    Ok(fast_truncate(&axpby_raw(alpha, x, beta, y)?, abs_tol, max_rank)?.0)
}

fn left_orthogonal_sum(
    alpha: f64,
    x: &TensorTrain,
    beta: f64,
    y: &TensorTrain,
    abs_tol: f64,
    max_rank: usize,
) -> Result<TensorTrain> {
    let d = x.d();
    if d == 1 {
        let mut z = axpby_raw(alpha, x, beta, y)?;
        z.set_ortho(Ortho::Right(0), false);
        return Ok(z);
    }
    if y.max_rank() > x.max_rank() {
        return left_orthogonal_sum(beta, y, alpha, x, abs_tol, max_rank);
    }
    let approx = x.is_approx_ortho() || y.is_approx_ortho();
    let mut cores = Vec::with_capacity(d);
    // ybar: core of Y with its left bond replaced by the carried [M; R].
    let mut ybar = y.core(0).clone();
    for j in 0..d - 1 {
        let xj = x.core(j);
        let (rx0, n, rx1) = shape(xj);
        let (rows0, _, ry1) = shape(&ybar);
        // Part of ybar in the span of X_j: only the first rx0 bond rows overlap.
        let top = top_rows(&ybar, rx0);
        let mut m = contract(xj.matrix(2).t(), top.matrix(2))?;
        let mut w = ybar.to_matrix(2);
        subtract_projection(&mut w, xj, rows0, &m)?;
        // One reorthogonalization pass.
        let top2 = top_rows(&DenseTensor::from_matrix(&w, &[rows0, n, ry1])?, rx0);
        let m2 = contract(xj.matrix(2).t(), top2.matrix(2))?;
        subtract_projection(&mut w, xj, rows0, &m2)?;
        for (a, b) in m.as_mut().data.iter_mut().zip(m2.as_ref().data) {
            *a += b;
        }
        let (q, r) = householder_qr(w.as_ref());
        let k = q.cols();
        let mut z = DenseTensor::zeros(&[rows0, n, rx1 + k]);
        add_block(&mut z, xj, 0, 0, 1.0);
        add_block(&mut z, &DenseTensor::from_matrix(&q, &[rows0, n, k])?, 0, rx1, 1.0);
        cores.push(z);
        let mut carry = Matrix::zeros(rx1 + k, ry1);
        for c in 0..ry1 {
            carry.col_mut(c)[..rx1].copy_from_slice(m.col(c));
            carry.col_mut(c)[rx1..].copy_from_slice(r.col(c));
        }
        ybar = absorb_left(&carry, y.core(j + 1))?;
    }
    let (rows0, n, _) = shape(&ybar);
    let mut last = ybar;
    last.scale(beta);
    let mut padded = DenseTensor::zeros(&[rows0, n, 1]);
    add_block(&mut padded, x.core(d - 1), 0, 0, alpha);
    for (a, b) in last.data_mut().iter_mut().zip(padded.data()) {
        *a += b;
    }
    cores.push(last);
    let mut z = TensorTrain::from_cores(cores)?;
    z.set_ortho(Ortho::Left(d - 1), approx);
    svd_sweep(&mut z, abs_tol, max_rank)?;
    z.set_ortho(Ortho::Right(0), approx);
    Ok(z)
}

// Rows of the left unfolding whose bond index is below `rx0`, as a core.
fn top_rows(c: &DenseTensor, rx0: usize) -> DenseTensor {
    let (r0, n, r1) = shape(c);
    if r0 == rx0 {
        return c.clone();
    }
    let mut out = DenseTensor::zeros(&[rx0, n, r1]);
    let src = c.data();
    let dst = out.data_mut();
    for b in 0..r1 {
        for i in 0..n {
            let so = i * r0 + b * r0 * n;
            let dof = i * rx0 + b * rx0 * n;
            dst[dof..dof + rx0].copy_from_slice(&src[so..so + rx0]);
        }
    }
    out
}

// w -= pad(X_j)·m, where pad(X_j) has zero rows for bond indices ≥ rX.
fn subtract_projection(w: &mut Matrix, xj: &DenseTensor, rows0: usize, m: &Matrix) -> Result<()> {
    let (rx0, n, _) = shape(xj);
    let cols = m.cols();
    let mut p = vec![0.0; rx0 * n * cols];
    gemm(1.0, xj.matrix(2), m.as_ref(), 0.0, MatMut::col_major(&mut p, rx0 * n, cols))?;
    for c in 0..cols {
        let wc = w.col_mut(c);
        for i in 0..n {
            for a in 0..rx0 {
                wc[a + i * rows0] -= p[a + i * rx0 + c * rx0 * n];
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::flops::measure;
    use crate::tt::{norm, orthogonalize, truncate, Direction};

    fn left(x: TensorTrain) -> TensorTrain {
        let mut x = x;
        let d = x.d();
        orthogonalize(&mut x, Direction::Left, d - 1).unwrap();
        x
    }

    fn dist(a: &TensorTrain, b: &TensorTrain) -> f64 {
        norm(&axpby_raw(1.0, a, -1.0, b).unwrap())
    }

    #[test]
    fn matches_raw_sum() {
        let dims = [4, 5, 3, 4];
        let x = left(TensorTrain::random(&dims, &[1, 4, 6, 4, 1], 1).unwrap().0);
        let y = left(TensorTrain::random(&dims, &[1, 2, 3, 2, 1], 2).unwrap().0);
        let z = axpby_trunc_ortho(0.7, &x, -1.3, &y, 0.0, usize::MAX).unwrap();
        let raw = axpby_raw(0.7, &x, -1.3, &y).unwrap();
        assert!(dist(&z, &raw) <= 1e-12 * norm(&raw));
        assert!(z.is_right_orthogonal());
    }

    #[test]
    fn zero_beta_keeps_x() {
        let dims = [3, 3, 3];
        let x = left(TensorTrain::random(&dims, &[1, 3, 3, 1], 4).unwrap().0);
        let y = left(TensorTrain::random(&dims, &[1, 2, 2, 1], 5).unwrap().0);
        let z = axpby_trunc_ortho(2.0, &x, 0.0, &y, 0.0, usize::MAX).unwrap();
        assert_eq!(z.ranks(), x.ranks());
        assert!(dist(&z, &x.clone().scaled(2.0)) <= 1e-12 * norm(&x));
    }

    #[test]
    fn right_orthogonal_inputs() {
        let dims = [3, 4, 5];
        let mut x = TensorTrain::random(&dims, &[1, 3, 4, 1], 6).unwrap().0;
        let mut y = TensorTrain::random(&dims, &[1, 2, 2, 1], 7).unwrap().0;
        orthogonalize(&mut x, Direction::Right, 0).unwrap();
        orthogonalize(&mut y, Direction::Right, 0).unwrap();
        let z = axpby_trunc_ortho(1.0, &x, 1.0, &y, 0.0, usize::MAX).unwrap();
        assert!(z.is_left_orthogonal());
        assert!(dist(&z, &axpby_raw(1.0, &x, 1.0, &y).unwrap()) <= 1e-12 * norm(&x));
    }

    #[test]
    fn cheaper_than_standard_for_small_y() {
        let dims = [20; 6];
        let x = left(TensorTrain::random(&dims, &[1, 20, 20, 20, 20, 20, 1], 8).unwrap().0);
        let y = left(TensorTrain::random(&dims, &[1, 10, 10, 10, 10, 10, 1], 9).unwrap().0);
        let tol = 1e-8 * norm(&x);
        let (fast, ff) = measure(|| axpby_trunc_ortho(1.0, &x, 1.0, &y, tol, usize::MAX).unwrap());
        let (std, fs) = measure(|| truncate(&axpby_raw(1.0, &x, 1.0, &y).unwrap(), tol, usize::MAX).unwrap());
        assert!(ff.total() < fs.total(), "{} vs {}", ff.total(), fs.total());
        assert!(dist(&fast, &std) <= 2.0 * tol);
    }
}
