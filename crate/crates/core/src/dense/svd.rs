use super::flops::{self, FlopKind};
use super::gemm::contract;
use super::matrix::{MatRef, Matrix};
use super::qr::Householder;

/// Thin singular value decomposition `M ≈ U·diag(s)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U·diag(s)`.
    pub fn us(&self) -> Matrix {
        let mut m = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            for x in m.col_mut(j) {
                *x *= sj;
            }
        }
        m
    }

    /// `diag(s)·Vᵀ`.
    pub fn svt(&self) -> Matrix {
        let mut m = self.v.t().to_owned();
        for (i, &si) in self.s.iter().enumerate() {
            for j in 0..m.cols() {
                m[(i, j)] *= si;
            }
        }
        m
    }
}

/// Smallest rank `r` whose discarded tail satisfies `sqrt(Σ_{i≥r} s_i²) ≤ abs_tol`,
/// capped by `max_rank` and never below one.
pub fn select_rank(s: &[f64], abs_tol: f64, max_rank: usize) -> usize {
    let mut tail = 0.0f64;
    let mut r = s.len();
    while r > 0 {
        let t = tail + s[r - 1] * s[r - 1];
        if t.sqrt() > abs_tol {
            break;
        }
        tail = t;
        r -= 1;
    }
    r.min(max_rank).max(1)
}

/// Truncated SVD keeping the smallest rank allowed by `abs_tol` and `max_rank`.
///
/// A zero matrix yields rank one with `s = [0]` and unit vectors for `U`, `V`.
/// Flops are booked as the estimate `14·max(m,n)·min(m,n)²`.
pub fn truncated_svd(m: MatRef<'_>, abs_tol: f64, max_rank: usize) -> Svd {
    let (a, b) = (m.rows().max(m.cols()), m.rows().min(m.cols()));
    flops::record(FlopKind::Svd, 14 * (a * b * b) as u64);
    let full = flops::uncounted(|| svd_full(m));
    truncate(full, abs_tol, max_rank)
}

pub(crate) fn truncate(full: Svd, abs_tol: f64, max_rank: usize) -> Svd {
    let r = select_rank(&full.s, abs_tol, max_rank).min(full.s.len().max(1));
    if full.s.is_empty() {
        return Svd { u: Matrix::zeros(full.u.rows(), 1), s: vec![0.0], v: Matrix::zeros(full.v.rows(), 1) };
    }
    Svd { u: full.u.leading_cols(r), s: full.s[..r].to_vec(), v: full.v.leading_cols(r) }
}

/// All `min(m, n)` singular triplets, sorted in descending order.
pub(crate) fn svd_full(m: MatRef<'_>) -> Svd {
    if m.rows() < m.cols() {
        let t = svd_full(m.t());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let n = m.cols();
    if n == 0 {
        return Svd { u: Matrix::zeros(m.rows(), 0), s: vec![], v: Matrix::zeros(0, 0) };
    }
    let (q, r) = if m.rows() > n {
        let h = Householder::factor(m);
        (Some(h.q()), h.r())
    } else {
        (None, m.to_owned())
    };
    let (ur, s, v) = jacobi(r);
    let u = match q {
        Some(q) => contract(q.as_ref(), ur.as_ref()).expect("shapes agree"),
        None => ur,
    };
    Svd { u, s, v }
}

/// One-sided Jacobi on a square matrix: returns `U`, `s`, `V` with `A = U·diag(s)·Vᵀ`.
fn jacobi(mut a: Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let n = a.cols();
    let mut v = Matrix::identity(n);
    let eps = f64::EPSILON;
    let mut norms: Vec<f64> = (0..n).map(|j| sq(a.col(j))).collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma: f64 = a.col(p).iter().zip(a.col(q)).map(|(x, y)| x * y).sum();
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                norms[p] = sq(a.col(p));
                norms[q] = sq(a.col(q));
            }
        }
        if !rotated {
            break;
        }
    }
    let sv: Vec<f64> = (0..n).map(|j| super::gemm::norm2(a.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let mut u = Matrix::zeros(n, n);
    let mut vs = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sj = sv[j];
        s.push(sj);
        vs.col_mut(k).copy_from_slice(v.col(j));
        if sj > 0.0 {
            for (dst, src) in u.col_mut(k).iter_mut().zip(a.col(j)) {
                *dst = src / sj;
            }
        }
    }
    complete_basis(&mut u, s.iter().take_while(|&&x| x > 0.0).count());
    (u, s, vs)
}

fn sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rotate(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows();
    for i in 0..rows {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

// Fills columns `k..` with unit vectors orthogonal to the first `k` columns.
fn complete_basis(u: &mut Matrix, k: usize) {
    let n = u.rows();
    let mut next = k;
    for e in 0..n {
        if next >= u.cols() {
            break;
        }
        let mut x = vec![0.0; n];
        x[e] = 1.0;
        for _ in 0..2 {
            for j in 0..next {
                let d: f64 = u.col(j).iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, uj) in x.iter_mut().zip(u.col(j)) {
                    *xi -= d * uj;
                }
            }
        }
        let nx = sq(&x).sqrt();
        if nx > 0.5 {
            for (dst, xi) in u.col_mut(next).iter_mut().zip(&x) {
                *dst = xi / nx;
            }
            next += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::flops::measure;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn reconstruct(s: &Svd) -> Matrix {
        contract(s.us().as_ref(), s.v.t()).unwrap()
    }

    #[test]
    fn diagonal_example_truncates_to_two() {
        let m = Matrix::from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 1e-9]]);
        let svd = truncated_svd(m.as_ref(), 1e-6, 10);
        assert_eq!(svd.s.len(), 2);
        assert!((svd.s[0] - 3.0).abs() < 1e-15 && (svd.s[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_gives_rank_one() {
        let svd = truncated_svd(Matrix::zeros(4, 3).as_ref(), 0.0, 5);
        assert_eq!(svd.s, vec![0.0]);
        assert_eq!((svd.u.rows(), svd.u.cols(), svd.v.rows(), svd.v.cols()), (4, 1, 3, 1));
        assert!((svd.u.frobenius_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_svd_reconstructs_tall_and_wide() {
        for (m, n) in [(20, 6), (6, 20), (7, 7), (1, 5)] {
            let a = random(m, n, (m + 10 * n) as u64);
            let svd = truncated_svd(a.as_ref(), 0.0, usize::MAX);
            assert!(reconstruct(&svd).max_abs_diff(&a) < 1e-13);
            let k = svd.rank();
            let utu = contract(svd.u.t(), svd.u.as_ref()).unwrap();
            let vtv = contract(svd.v.t(), svd.v.as_ref()).unwrap();
            assert!(utu.max_abs_diff(&Matrix::identity(k)) < 1e-13);
            assert!(vtv.max_abs_diff(&Matrix::identity(k)) < 1e-13);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn tail_criterion_is_sharp() {
        let s = [4.0, 3.0, 0.3, 0.4];
        assert_eq!(select_rank(&s, 0.5, 10), 2);
        assert_eq!(select_rank(&s, 0.49, 10), 3);
        assert_eq!(select_rank(&s, 100.0, 10), 1);
        assert_eq!(select_rank(&s, 0.0, 3), 3);
    }

    #[test]
    fn rank_deficient_input_has_orthonormal_u() {
        let x = random(9, 1, 3);
        let y = random(1, 5, 4);
        let a = contract(x.as_ref(), y.as_ref()).unwrap();
        let full = svd_full(a.as_ref());
        assert!(full.s[1] < 1e-14 * full.s[0]);
        let utu = contract(full.u.t(), full.u.as_ref()).unwrap();
        assert!(utu.max_abs_diff(&Matrix::identity(5)) < 1e-12);
    }

    #[test]
    fn flop_estimate() {
        let a = random(30, 10, 1);
        let (_, f) = measure(|| truncated_svd(a.as_ref(), 0.0, 100));
        assert_eq!(f.svd, 14 * 30 * 100);
        assert_eq!(f.total(), f.svd);
    }
}
