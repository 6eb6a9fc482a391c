//! Test problems: the convection-diffusion operator and right-hand sides.

use crate::dense::{DenseTensor, Matrix};
use crate::error::{violation, Result};
use crate::tt::{TensorTrain, TtOperator};

/// One-dimensional stencil `(−1, 2, −1)/h² + c/√d·(0, 1, −1)/h` on `n`
/// interior points with `h = 1/(n+1)`.
pub fn conv_diff_1d(n: usize, c: f64, d: usize) -> Matrix {
    let h = 1.0 / (n as f64 + 1.0);
    let conv = c / (d as f64).sqrt() / h;
    let diff = 1.0 / (h * h);
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * diff + conv
        } else if j + 1 == i {
            -diff
        } else if j == i + 1 {
            -diff - conv
        } else {
            0.0
        }
    })
}

/// `Σ_j I ⊗ … ⊗ L_j ⊗ … ⊗ I` as a TT operator of rank 2.
///
/// Cores are `[L₁  I]`, `[[I 0] [L_k I]]` and `[I; L_d]`; for `d = 1` the
/// single core is `L₁`. The operator is flagged symmetric exactly when `c = 0`.
pub fn conv_diff_operator(dims: &[usize], c: f64) -> Result<TtOperator> {
    if dims.is_empty() || dims.iter().any(|&n| n < 2) {
        return Err(violation(format!("convection-diffusion needs d ≥ 1 and all n ≥ 2, got {dims:?}")));
    }
    if !c.is_finite() {
        return Err(violation("convection coefficient must be finite"));
    }
    let d = dims.len();
    let cores = dims
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let l = conv_diff_1d(n, c, d);
            let (r0, r1) = match (k == 0, k == d - 1) {
                (true, true) => (1, 1),
                (true, false) => (1, 2),
                (false, true) => (2, 1),
                (false, false) => (2, 2),
            };
            let mut core = DenseTensor::zeros(&[r0, n, n, r1]);
            // (left, right) block positions of L and of I.
            let l_at = if r0 == 2 { (1, 0) } else { (0, 0) };
            let eye_at: &[(usize, usize)] = match (r0, r1) {
                (1, 1) => &[],
                (1, 2) => &[(0, 1)],
                (2, 1) => &[(0, 0)],
                _ => &[(0, 0), (1, 1)],
            };
            for j in 0..n {
                for i in 0..n {
                    core.set(&[l_at.0, i, j, l_at.1], l[(i, j)]);
                }
                for &(a, b) in eye_at {
                    core.set(&[a, j, j, b], 1.0);
                }
            }
            core
        })
        .collect();
    let mut op = TtOperator::from_cores(cores)?;
    op.set_symmetric(c == 0.0);
    Ok(op)
}

/// Rank-one train of ones.
pub fn rhs_ones(dims: &[usize]) -> Result<TensorTrain> {
    TensorTrain::constant(dims, 1.0)
}

/// Random train with the given interior ranks, scaled to unit norm.
pub fn rhs_random(dims: &[usize], rank: usize, seed: u64) -> Result<TensorTrain> {
    let d = dims.len();
    let ranks: Vec<usize> = (0..=d).map(|k| if k == 0 || k == d { 1 } else { rank }).collect();
    let (x, _) = TensorTrain::random(dims, &ranks, seed)?;
    let nrm = crate::tt::norm(&x);
    if nrm == 0.0 {
        return Err(violation("random right-hand side vanished"));
    }
    Ok(x.scaled(1.0 / nrm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::{dot, norm};

    fn kron(a: &Matrix, b: &Matrix) -> Matrix {
        // First index fastest: (i1, i2) -> i1 + n1·i2 means B ⊗ A in the usual order.
        let (n1, n2) = (a.rows(), b.rows());
        Matrix::from_fn(n1 * n2, n1 * n2, |r, c| a[(r % n1, c % n1)] * b[(r / n1, c / n1)])
    }

    #[test]
    fn one_dimensional_stencil() {
        let op = conv_diff_operator(&[3], 0.0).unwrap();
        let f = op.to_full().unwrap();
        let expect = Matrix::from_rows(&[&[32.0, -16.0, 0.0], &[-16.0, 32.0, -16.0], &[0.0, -16.0, 32.0]]);
        assert!(f.max_abs_diff(&expect) < 1e-12);
        assert!(op.is_symmetric());
    }

    #[test]
    fn kronecker_sum_in_two_and_three_dimensions() {
        for c in [0.0, 1.0, 10.0] {
            let l = conv_diff_1d(3, c, 2);
            let eye = Matrix::identity(3);
            let f = conv_diff_operator(&[3, 3], c).unwrap().to_full().unwrap();
            let mut expect = kron(&l, &eye);
            let b = kron(&eye, &l);
            for j in 0..9 {
                for i in 0..9 {
                    expect[(i, j)] += b[(i, j)];
                }
            }
            assert!(f.max_abs_diff(&expect) < 1e-12 * 100.0);
            assert_eq!(conv_diff_operator(&[3, 3], c).unwrap().is_symmetric(), c == 0.0);
        }
        let op = conv_diff_operator(&[2, 3, 4], 10.0).unwrap();
        assert_eq!(op.ranks(), vec![1, 2, 2, 1]);
    }

    #[test]
    fn rejects_tiny_modes() {
        assert!(conv_diff_operator(&[1, 3], 0.0).is_err());
        assert!(conv_diff_operator(&[], 0.0).is_err());
    }

    #[test]
    fn ones_and_random() {
        let x = rhs_ones(&[2, 2, 2]).unwrap();
        assert!((norm(&x) - 8f64.sqrt()).abs() < 1e-14);
        assert!((dot(&x, &x).unwrap() - 8.0).abs() < 1e-12);
        let r = rhs_random(&[20, 20, 20, 20], 5, 3).unwrap();
        assert!((norm(&r) - 1.0).abs() < 1e-13);
        assert_eq!(r.ranks(), vec![1, 5, 5, 5, 1]);
        assert_eq!(r, rhs_random(&[20, 20, 20, 20], 5, 3).unwrap());
    }
}
