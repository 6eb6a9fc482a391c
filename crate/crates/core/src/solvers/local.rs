use crate::dense::flops::{self, FlopKind};
use crate::dense::{contract, householder_qr, svd_full, DenseTensor, MatRef, Matrix};
use crate::error::{mismatch, violation, Result};
use crate::fast::stable_orthogonal_complement;
use crate::tt::{absorb_left, norm, orthogonalize, shape, Direction, Ortho, TensorTrain, TtOperator};

use super::env::Environment;
use super::map::TtLinearMap;

/// Checks the shapes of `A·X = B` and returns `‖B‖`.
pub(crate) fn check_system(a: &TtOperator, b: &TensorTrain, x0: &TensorTrain) -> Result<f64> {
    if a.row_dims() != a.col_dims() {
        return Err(mismatch("operator must be square"));
    }
    if a.dims() != b.dims() || x0.dims() != b.dims() {
        return Err(mismatch(format!(
            "operator {:?}, right-hand side {:?} and initial guess {:?} differ",
            a.dims(),
            b.dims(),
            x0.dims()
        )));
    }
    let bn = norm(b);
    if !(bn > 0.0) || !bn.is_finite() {
        return Err(violation("right-hand side must be nonzero and finite"));
    }
    Ok(bn)
}

/// System and iterate of an alternating solver, in the orientation of the
/// current half-sweep. Every half-sweep runs left to right; the frame is
/// reversed in between.
pub(crate) struct Frame {
    pub x: TensorTrain,
    pub a: TtOperator,
    pub b: TensorTrain,
    pub env: Environment,
    a_other: TtOperator,
    b_other: TensorTrain,
    reversed: bool,
}

impl Frame {
    /// Right-orthogonalizes `x0` and builds the right environments.
    pub(crate) fn new(a: &TtOperator, b: &TensorTrain, x0: &TensorTrain) -> Result<Self> {
        let d = a.d();
        let mut x = x0.clone();
        orthogonalize(&mut x, Direction::Right, 0)?;
        let mut env = Environment::new(d);
        env.build_right(1, &x, a, b)?;
        Ok(Frame { x, a: a.clone(), b: b.clone(), env, a_other: a.reversed(), b_other: b.reversed(), reversed: false })
    }

    pub(crate) fn d(&self) -> usize {
        self.x.d()
    }

    pub(crate) fn flip(&mut self) {
        self.x = self.x.reversed();
        std::mem::swap(&mut self.a, &mut self.a_other);
        std::mem::swap(&mut self.b, &mut self.b_other);
        self.env = std::mem::replace(&mut self.env, Environment::new(0)).reversed();
        self.reversed = !self.reversed;
    }

    /// The iterate in the original mode order.
    pub(crate) fn solution(&self) -> TensorTrain {
        if self.reversed {
            self.x.reversed()
        } else {
            self.x.clone()
        }
    }

    /// Ranks in the original mode order.
    pub(crate) fn ranks(&self) -> Vec<usize> {
        let mut r = self.x.ranks();
        if self.reversed {
            r.reverse();
        }
        r
    }

    /// Left-orthogonalizes core `j` by Householder QR, pushing `R` into core
    /// `j + 1`, and updates the left environment.
    pub(crate) fn left_orthogonalize(&mut self, j: usize) -> Result<()> {
        let (r0, n, _) = shape(self.x.core(j));
        let (q, r) = householder_qr(self.x.core(j).matrix(2));
        let next = absorb_left(&r, self.x.core(j + 1))?;
        *self.x.core_mut(j) = DenseTensor::from_matrix(&q, &[r0, n, q.cols()])?;
        *self.x.core_mut(j + 1) = next;
        self.env.update_left(j, &self.x, &self.a, &self.b)
    }

    /// Replaces cores `j` (left-orthogonal) and `j + 1`, then updates the
    /// left environment of position `j + 1`.
    pub(crate) fn set_pair(&mut self, j: usize, left: DenseTensor, right: DenseTensor) -> Result<()> {
        *self.x.core_mut(j) = left;
        *self.x.core_mut(j + 1) = right;
        self.env.update_left(j, &self.x, &self.a, &self.b)
    }

    /// Marks cores `0..d−1` as left-orthogonal after a completed half-sweep.
    pub(crate) fn mark_swept(&mut self) {
        let d = self.d();
        self.x.set_ortho(Ortho::Left(d - 1), false);
    }

    /// `‖B − A·X‖_F`.
    pub(crate) fn residual_norm(&self) -> Result<f64> {
        super::ops::residual_norm(&self.a, &self.b, &self.x)
    }
}

/// Relative size below which singular values are treated as zero.
const SV_NOISE: f64 = 1e-14;

/// Rank-`k` factors `left·right` of a local solution with the local
/// residual of that approximation.
pub(crate) struct Split<T> {
    /// Orthonormal columns.
    pub left: Matrix,
    pub right: Matrix,
    pub residual_norm: f64,
    pub extra: T,
}

/// Local residual allowed after truncating a solution with residual `res`:
/// `2·res` above `floor`, and between `floor/2` and `floor` below it.
pub(crate) fn truncation_threshold(res: f64, floor: f64) -> f64 {
    if res > floor {
        2.0 * res
    } else {
        (2.0 * res).clamp(0.5 * floor, floor)
    }
}

/// Local residual (and any by-product) of factors `left·right`.
pub(crate) type SplitEval<'a, T> = dyn FnMut(&Matrix, &Matrix) -> Result<(f64, T)> + 'a;

/// Truncates `lf·rf` to the smallest rank whose local residual, reported by
/// `eval(left, right)`, stays below `threshold`. If even the untruncated
/// product misses the threshold, the numerical rank is kept.
///
/// With `guess = (res, gain)` the first rank tried is the smallest one with
/// `√(res² + (gain·tail)²) ≤ threshold`, where `tail` is the discarded part
/// of the singular values; it is accepted if it passes. Otherwise the rank
/// is found by bisection over the ranks above it.
pub(crate) fn residual_truncation<T>(
    lf: MatRef<'_>,
    rf: MatRef<'_>,
    max_rank: usize,
    threshold: f64,
    guess: Option<(f64, f64)>,
    eval: &mut SplitEval<'_, T>,
) -> Result<Split<T>> {
    let (q0, r0) = householder_qr(lf);
    let (q1, r1) = householder_qr(rf.t());
    let small = contract(r0.as_ref(), r1.t())?;
    let (p, q) = (small.rows().max(small.cols()), small.rows().min(small.cols()));
    flops::record(FlopKind::Svd, 14 * (p * q * q) as u64);
    let svd = flops::uncounted(|| svd_full(small.as_ref()));
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let numerical = svd.s.iter().take_while(|&&s| s > SV_NOISE * smax).count().max(1);
    let hi = numerical.min(max_rank);
    let svt = svd.svt();
    let mut at = |k: usize| -> Result<Split<T>> {
        let left = contract(q0.as_ref(), svd.u.leading_cols(k).as_ref())?;
        let right = contract(svt.as_ref().sub(0, 0, k, svt.cols()), q1.t())?;
        let (residual_norm, extra) = eval(&left, &right)?;
        Ok(Split { left, right, residual_norm, extra })
    };
    let mut lo = 1;
    if let Some((res, gain)) = guess {
        let mut tail2: f64 = svd.s[hi..].iter().map(|s| s * s).sum();
        let mut k0 = hi;
        while k0 > 1 {
            let next = tail2 + svd.s[k0 - 1] * svd.s[k0 - 1];
            if (res * res + gain * gain * next).sqrt() > threshold {
                break;
            }
            tail2 = next;
            k0 -= 1;
        }
        let first = at(k0)?;
        if first.residual_norm <= threshold || k0 == hi {
            return Ok(first);
        }
        lo = k0 + 1;
    }
    let mut best = at(hi)?;
    if best.residual_norm > threshold {
        return Ok(best);
    }
    // Smallest passing rank in [lo, hi_ok]; `best` holds rank `hi_ok`.
    let mut hi_ok = hi;
    while lo < hi_ok {
        let mid = (lo + hi_ok) / 2;
        let s = at(mid)?;
        if s.residual_norm <= threshold {
            best = s;
            hi_ok = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(best)
}

/// Appends to the orthonormal columns `q` up to `k` leading left singular
/// directions of `(I − QQᵀ)z`, skipping directions below `1e-12·‖z‖`.
pub(crate) fn enrich(q: &Matrix, z: MatRef<'_>, k: usize, max_cols: usize) -> Result<Matrix> {
    let room = max_cols.saturating_sub(q.cols()).min(k);
    if room == 0 {
        return Ok(q.clone());
    }
    let zn = z.frobenius_norm();
    if !(zn > 0.0) {
        return Ok(q.clone());
    }
    let p = stable_orthogonal_complement(q.as_ref(), z)?;
    let (a, b) = (p.rows().max(p.cols()), p.rows().min(p.cols()));
    flops::record(FlopKind::Svd, 14 * (a * b * b) as u64);
    let svd = flops::uncounted(|| svd_full(p.as_ref()));
    let take = svd.s.iter().take(room).take_while(|&&s| s > 1e-12 * zn).count();
    if take == 0 {
        return Ok(q.clone());
    }
    let mut out = Matrix::zeros(q.rows(), q.cols() + take);
    for j in 0..q.cols() {
        out.col_mut(j).copy_from_slice(q.col(j));
    }
    for j in 0..take {
        out.col_mut(q.cols() + j).copy_from_slice(svd.u.col(j));
    }
    // One more projection keeps the appended block orthogonal to `q`.
    let mut tail = Matrix::from_fn(q.rows(), take, |i, j| out[(i, q.cols() + j)]);
    let c = contract(q.t(), tail.as_ref())?;
    crate::dense::gemm(-1.0, q.as_ref(), c.as_ref(), 1.0, tail.as_mut())?;
    let (tq, _) = householder_qr(tail.as_ref());
    for j in 0..take {
        out.col_mut(q.cols() + j).copy_from_slice(tq.col(j));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truncation_picks_smallest_sufficient_rank() {
        // y = diag(10, 1, 0.1, 0.01) padded; residual = norm of the discarded part.
        let y = Matrix::from_fn(6, 4, |i, j| if i == j { 10f64.powi(1 - i as i32) } else { 0.0 });
        let eye = Matrix::identity(4);
        let mut eval = |l: &Matrix, r: &Matrix| -> Result<(f64, usize)> {
            let approx = contract(l.as_ref(), r.as_ref())?;
            Ok((approx.max_abs_diff(&y).max(0.0), l.cols()))
        };
        let s = residual_truncation(y.as_ref(), eye.as_ref(), usize::MAX, 0.5, None, &mut eval).unwrap();
        assert_eq!(s.extra, 2);
        let s = residual_truncation(y.as_ref(), eye.as_ref(), usize::MAX, 1e-14, None, &mut eval).unwrap();
        assert_eq!(s.extra, 4);
        let s = residual_truncation(y.as_ref(), eye.as_ref(), 3, 1e-14, None, &mut eval).unwrap();
        assert_eq!(s.extra, 3);
        let g = contract(s.left.t(), s.left.as_ref()).unwrap();
        assert!(g.max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn enrichment_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (q, _) = householder_qr(Matrix::from_fn(12, 3, |_, _| rng.random_range(-1.0..1.0)).as_ref());
        let z = Matrix::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
        let e = enrich(&q, z.as_ref(), 2, 12).unwrap();
        assert_eq!(e.cols(), 5);
        let g = contract(e.t(), e.as_ref()).unwrap();
        assert!(g.max_abs_diff(&Matrix::identity(5)) < 1e-13);
        // No room: unchanged.
        assert_eq!(enrich(&q, z.as_ref(), 2, 3).unwrap().cols(), 3);
        // Directions inside span(q) are skipped.
        assert_eq!(enrich(&q, q.as_ref(), 2, 12).unwrap().cols(), 3);
    }
}
