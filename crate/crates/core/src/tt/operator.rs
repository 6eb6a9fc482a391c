use crate::dense::{tensordot, DenseTensor, Matrix};
use crate::error::{mismatch, violation, Error, Result};

use super::train::{Ortho, TensorTrain};

/// Largest number of matrix entries [`TtOperator::to_full`] will produce.
pub const DENSE_OPERATOR_LIMIT: u128 = 25_000_000;

/// Linear operator in TT format. Core `k` has shape `rA_k x n_k x m_k x rA_{k+1}`
/// (left rank, row index, column index, right rank), first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TtOperator {
    cores: Vec<DenseTensor>,
    symmetric: bool,
}

impl TtOperator {
    /// Validates the cores. The operator is flagged symmetric when every core
    /// satisfies `A[:, i, j, :] = A[:, j, i, :]` exactly.
    pub fn from_cores(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(violation("an operator needs at least one core"));
        }
        for (k, c) in cores.iter().enumerate() {
            if c.dims().len() != 4 {
                return Err(mismatch(format!("operator core {k} has order {}", c.dims().len())));
            }
        }
        if cores[0].dims()[0] != 1 || cores[cores.len() - 1].dims()[3] != 1 {
            return Err(violation("boundary operator ranks must be one"));
        }
        for k in 1..cores.len() {
            if cores[k - 1].dims()[3] != cores[k].dims()[0] {
                return Err(mismatch(format!("operator rank chain broken at bond {k}")));
            }
        }
        let symmetric = cores.iter().all(core_is_symmetric);
        Ok(TtOperator { cores, symmetric })
    }

    /// Identity on the given mode sizes.
    pub fn identity(dims: &[usize]) -> Result<Self> {
        let cores = dims
            .iter()
            .map(|&n| {
                let mut c = DenseTensor::zeros(&[1, n, n, 1]);
                for i in 0..n {
                    c.set(&[0, i, i, 0], 1.0);
                }
                c
            })
            .collect();
        Self::from_cores(cores)
    }

    /// Rank-one operator `M₁ ⊗ … ⊗ M_d` with `M_k` of size `n_k x m_k`.
    pub fn kron(mats: &[Matrix]) -> Result<Self> {
        let cores = mats
            .iter()
            .map(|m| DenseTensor::from_vec(&[1, m.rows(), m.cols(), 1], m.to_col_major()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_cores(cores)
    }

    /// Overrides the symmetry flag, for operators that are symmetric in exact
    /// arithmetic but were assembled with rounding.
    pub(crate) fn set_symmetric(&mut self, symmetric: bool) {
        self.symmetric = symmetric;
    }

    pub fn d(&self) -> usize {
        self.cores.len()
    }

    pub fn row_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    pub fn col_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[2]).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dims()[0]).collect();
        r.push(1);
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn core(&self, k: usize) -> &DenseTensor {
        &self.cores[k]
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// The operator as a tensor train over fused modes `(i, j)`.
    pub fn as_train(&self) -> TensorTrain {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let d = c.dims();
                c.clone().reshape(&[d[0], d[1] * d[2], d[3]]).expect("same size")
            })
            .collect();
        TensorTrain::from_parts(cores, Ortho::None)
    }

    /// Inverse of [`TtOperator::as_train`].
    pub fn from_train(x: &TensorTrain, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if x.d() != rows.len() || rows.len() != cols.len() {
            return Err(mismatch("mode lists do not match the train"));
        }
        let cores = x
            .cores()
            .iter()
            .zip(rows.iter().zip(cols))
            .map(|(c, (&n, &m))| {
                let d = c.dims();
                c.clone().reshape(&[d[0], n, m, d[2]])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cores(cores)
    }

    /// Operator with modes in reverse order, matching [`TensorTrain::reversed`].
    pub fn reversed(&self) -> TtOperator {
        let cores = self.cores.iter().rev().map(|c| c.permute(&[3, 1, 2, 0])).collect();
        TtOperator { cores, symmetric: self.symmetric }
    }

    /// Dense matrix whose row and column multi-indices run first-mode-fastest.
    pub fn to_full(&self) -> Result<Matrix> {
        let rows: u128 = self.row_dims().iter().map(|&n| n as u128).product();
        let cols: u128 = self.col_dims().iter().map(|&n| n as u128).product();
        if rows.saturating_mul(cols) > DENSE_OPERATOR_LIMIT {
            return Err(Error::OracleTooLarge { entries: rows * cols, limit: DENSE_OPERATOR_LIMIT });
        }
        let d = self.d();
        let mut acc = self.cores[0].clone();
        for k in 1..d {
            let nd = acc.dims().len();
            acc = tensordot(&acc, &[nd - 1], &self.cores[k], &[0])?;
        }
        // acc: [1, i1, j1, i2, j2, ..., id, jd, 1]
        let mut perm: Vec<usize> = (0..d).map(|k| 1 + 2 * k).collect();
        perm.extend((0..d).map(|k| 2 + 2 * k));
        let mut dims = acc.dims().to_vec();
        dims.remove(0);
        dims.pop();
        let acc = acc.reshape(&dims)?;
        let perm: Vec<usize> = perm.iter().map(|p| p - 1).collect();
        let full = acc.permute(&perm);
        Matrix::from_col_major(rows as usize, cols as usize, full.into_data())
    }

    /// `A·X` with ranks `rA_k · r_k` (operator rank index running fastest).
    pub fn apply(&self, x: &TensorTrain) -> Result<TensorTrain> {
        if self.col_dims() != x.dims() {
            return Err(mismatch(format!(
                "operator columns {:?} do not match train modes {:?}",
                self.col_dims(),
                x.dims()
            )));
        }
        let cores = self.cores.iter().zip(x.cores()).map(|(a, c)| apply_core(a, c)).collect::<Result<Vec<_>>>()?;
        Ok(TensorTrain::from_parts(cores, Ortho::None))
    }
}

/// `Y[(α,a), i, (β,b)] = Σ_j A[α,i,j,β] X[a,j,b]`.
pub(crate) fn apply_core(a: &DenseTensor, x: &DenseTensor) -> Result<DenseTensor> {
    let (ra0, n, _, ra1) = (a.dims()[0], a.dims()[1], a.dims()[2], a.dims()[3]);
    let (r0, r1) = (x.dims()[0], x.dims()[2]);
    // [α, i, β, a, b]
    let t = tensordot(a, &[2], x, &[1])?;
    let y = t.permute(&[0, 3, 1, 2, 4]);
    y.reshape(&[ra0 * r0, n, ra1 * r1])
}

fn core_is_symmetric(c: &DenseTensor) -> bool {
    let d = c.dims();
    if d[1] != d[2] {
        return false;
    }
    for b in 0..d[3] {
        for j in 0..d[2] {
            for i in 0..j {
                for a in 0..d[0] {
                    if c.get(&[a, i, j, b]) != c.get(&[a, j, i, b]) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_to_full() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let op = TtOperator::kron(&[a.clone(), b.clone()]).unwrap();
        let f = op.to_full().unwrap();
        // row (i1, i2) -> i1 + 2 i2, value a[i1,j1] b[i2,j2]
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        assert_eq!(f[(i1 + 2 * i2, j1 + 2 * j2)], a[(i1, j1)] * b[(i2, j2)]);
                    }
                }
            }
        }
        assert!(!op.is_symmetric());
        assert!(TtOperator::identity(&[3, 4]).unwrap().is_symmetric());
    }

    #[test]
    fn reversal_is_consistent_with_apply() {
        let a = Matrix::from_fn(2, 2, |i, j| (i + 3 * j) as f64);
        let b = Matrix::from_fn(3, 3, |i, j| (2 * i + j) as f64 - 1.0);
        let op = TtOperator::kron(&[a, b]).unwrap();
        let (x, _) = TensorTrain::random(&[2, 3], &[1, 2, 1], 1).unwrap();
        let y1 = op.apply(&x).unwrap().reversed().to_full().unwrap();
        let y2 = op.reversed().apply(&x.reversed()).unwrap().to_full().unwrap();
        for (p, q) in y1.data().iter().zip(y2.data()) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
