use super::flops::{self, FlopKind};
use super::gemm::norm2;
use super::matrix::{MatRef, Matrix};

/// Householder factorization stored LAPACK style: `R` in the upper triangle,
/// reflector tails below the diagonal.
pub(crate) struct Householder {
    a: Matrix,
    tau: Vec<f64>,
}

impl Householder {
    pub(crate) fn factor(m: MatRef<'_>) -> Self {
        let mut a = m.to_owned();
        let (rows, cols) = (a.rows(), a.cols());
        let k = rows.min(cols);
        let s = a.stride();
        let mut tau = vec![0.0; k];
        let data = a_data_mut(&mut a);
        for c in 0..k {
            let (head, tail) = data.split_at_mut((c + 1) * s);
            let v = &mut head[c * s + c..c * s + rows];
            let alpha = v[0];
            let xnorm = norm2(&v[1..]);
            if xnorm == 0.0 {
                continue;
            }
            let beta = -alpha.signum() * alpha.hypot(xnorm);
            tau[c] = (beta - alpha) / beta;
            let scale = 1.0 / (alpha - beta);
            for x in &mut v[1..] {
                *x *= scale;
            }
            v[0] = beta;
            let t = tau[c];
            for j in 0..cols - c - 1 {
                let col = &mut tail[j * s + c..j * s + rows];
                apply_reflector(v, t, col);
            }
        }
        Householder { a, tau }
    }

    fn k(&self) -> usize {
        self.a.rows().min(self.a.cols())
    }

    /// Upper trapezoidal `k x n` factor with a non-negative diagonal.
    pub(crate) fn r(&self) -> Matrix {
        let k = self.k();
        let n = self.a.cols();
        let mut r = Matrix::zeros(k, n);
        for j in 0..n {
            for i in 0..(j + 1).min(k) {
                r[(i, j)] = self.a[(i, j)];
            }
        }
        for i in 0..k {
            if r[(i, i)] < 0.0 {
                for j in i..n {
                    r[(i, j)] = -r[(i, j)];
                }
            }
        }
        r
    }

    /// Thin `m x k` orthonormal factor matching [`Householder::r`].
    pub(crate) fn q(&self) -> Matrix {
        let m = self.a.rows();
        let k = self.k();
        let mut q = Matrix::zeros(m, k);
        for i in 0..k {
            q[(i, i)] = 1.0;
        }
        let s = self.a.stride();
        let src = a_data(&self.a);
        for c in (0..k).rev() {
            let mut v = src[c * s + c..c * s + m].to_vec();
            v[0] = 1.0;
            for j in c..k {
                apply_reflector_unit(&v, self.tau[c], &mut q.col_mut(j)[c..]);
            }
        }
        for i in 0..k {
            if self.a[(i, i)] < 0.0 {
                for x in q.col_mut(i) {
                    *x = -*x;
                }
            }
        }
        q
    }
}

// `v[0]` holds the R diagonal; the reflector's leading entry is an implicit 1.
#[inline]
fn apply_reflector(v: &[f64], tau: f64, x: &mut [f64]) {
    let mut w = x[0];
    for (a, b) in v[1..].iter().zip(&x[1..]) {
        w += a * b;
    }
    w *= tau;
    x[0] -= w;
    for (xi, vi) in x[1..].iter_mut().zip(&v[1..]) {
        *xi -= w * vi;
    }
}

#[inline]
fn apply_reflector_unit(v: &[f64], tau: f64, x: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let w: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() * tau;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= w * vi;
    }
}

fn a_data(a: &Matrix) -> &[f64] {
    // Householder works on compact copies only.
    let len = a.stride() * a.cols();
    let v = a.as_ref();
    &v.data[..len]
}

fn a_data_mut(a: &mut Matrix) -> &mut [f64] {
    let len = a.stride() * a.cols();
    let v = a.as_mut();
    &mut v.data[..len]
}

fn qr_flops(m: usize, n: usize) -> u64 {
    let k = m.min(n);
    2 * (m * n * k) as u64
}

/// Thin Householder QR `M = Q·R` with `Q` of size `m x k`, `R` of size `k x n`,
/// `k = min(m, n)`, and a non-negative diagonal of `R`.
///
/// Flops: `2mnk` for the factorization plus `2mk²` for forming `Q`.
pub fn householder_qr(m: MatRef<'_>) -> (Matrix, Matrix) {
    let k = m.rows().min(m.cols());
    flops::record(FlopKind::Qr, qr_flops(m.rows(), m.cols()) + 2 * (m.rows() * k * k) as u64);
    let h = Householder::factor(m);
    (h.q(), h.r())
}

/// `R` factor only (`k x n`), counting `2mnk` flops.
pub fn householder_r(m: MatRef<'_>) -> Matrix {
    flops::record(FlopKind::Qr, qr_flops(m.rows(), m.cols()));
    Householder::factor(m).r()
}

/// Q-less tall-skinny QR: the `n x n` triangular factor of an `m x n` matrix,
/// computed with leaves of `4n` rows reduced pairwise in block order.
///
/// When `m < n` the trapezoidal factor is padded with zero rows, so
/// `RᵀR = MᵀM` holds in every case.
pub fn qless_tsqr(m: MatRef<'_>) -> Matrix {
    let n = m.cols();
    let leaf = (4 * n).max(1);
    qless_tsqr_with_leaf(m, leaf)
}

pub(crate) fn qless_tsqr_with_leaf(m: MatRef<'_>, leaf: usize) -> Matrix {
    let (rows, n) = (m.rows(), m.cols());
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let mut level: Vec<Matrix> = Vec::new();
    let mut r0 = 0;
    while r0 < rows || level.is_empty() {
        let h = leaf.min(rows - r0);
        level.push(pad_square(householder_r(m.sub(r0, 0, h, n)), n));
        r0 += h;
        if h == 0 {
            break;
        }
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => {
                    let mut stacked = Matrix::zeros(2 * n, n);
                    for j in 0..n {
                        stacked.col_mut(j)[..n].copy_from_slice(a.col(j));
                        stacked.col_mut(j)[n..].copy_from_slice(b.col(j));
                    }
                    next.push(pad_square(householder_r(stacked.as_ref()), n));
                }
                None => next.push(a),
            }
        }
        level = next;
    }
    level.pop().unwrap()
}

fn pad_square(r: Matrix, n: usize) -> Matrix {
    if r.rows() == n {
        return r;
    }
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        out.col_mut(j)[..r.rows()].copy_from_slice(r.col(j));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::gemm::contract;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_has_trivial_factors() {
        let (q, r) = householder_qr(Matrix::identity(3).as_ref());
        assert!(q.max_abs_diff(&Matrix::identity(3)) < 1e-15);
        assert!(r.max_abs_diff(&Matrix::identity(3)) < 1e-15);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        for (m, n) in [(12, 5), (5, 5), (4, 9), (1, 3), (30, 1)] {
            let a = random(m, n, (m * 31 + n) as u64);
            let (q, r) = householder_qr(a.as_ref());
            let k = m.min(n);
            assert_eq!((q.rows(), q.cols(), r.rows(), r.cols()), (m, k, k, n));
            let qr = contract(q.as_ref(), r.as_ref()).unwrap();
            assert!(qr.max_abs_diff(&a) < 1e-13);
            let qtq = contract(q.t(), q.as_ref()).unwrap();
            assert!(qtq.max_abs_diff(&Matrix::identity(k)) < 1e-14);
            for i in 0..k {
                assert!(r[(i, i)] >= 0.0);
                for j in 0..i.min(n) {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_column_is_left_alone() {
        let mut a = random(6, 3, 1);
        for x in a.col_mut(1) {
            *x = 0.0;
        }
        let (q, r) = householder_qr(a.as_ref());
        let qr = contract(q.as_ref(), r.as_ref()).unwrap();
        assert!(qr.max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn tsqr_single_leaf_matches_householder() {
        let a = random(8, 2, 5);
        let r1 = qless_tsqr(a.as_ref());
        let r2 = householder_r(a.as_ref());
        assert!(r1.max_abs_diff(&r2) < 1e-14);
    }

    #[test]
    fn tsqr_tree_gram_matches() {
        let a = random(1000, 7, 9);
        let r = qless_tsqr(a.as_ref());
        let g1 = contract(r.t(), r.as_ref()).unwrap();
        let g2 = contract(a.t(), a.as_ref()).unwrap();
        assert!(g1.max_abs_diff(&g2) < 1e-11 * g2.frobenius_norm());
        let r_ref = householder_r(a.as_ref());
        assert!(r.max_abs_diff(&r_ref) < 1e-12 * r_ref.frobenius_norm());
    }

    #[test]
    fn tsqr_wide_input_is_padded() {
        let a = random(3, 5, 2);
        let r = qless_tsqr(a.as_ref());
        assert_eq!((r.rows(), r.cols()), (5, 5));
        let g1 = contract(r.t(), r.as_ref()).unwrap();
        let g2 = contract(a.t(), a.as_ref()).unwrap();
        assert!(g1.max_abs_diff(&g2) < 1e-13);
    }
}
