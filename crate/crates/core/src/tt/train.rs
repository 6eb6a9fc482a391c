use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dense::{gemm, DenseTensor, MatMut, MatRef};
use crate::error::{mismatch, violation, Error, Result};

/// Largest number of entries the dense oracles will materialize.
pub const DENSE_ORACLE_LIMIT: u128 = 1_000_000;

/// Orthogonality marker of a tensor train. The payload is the index of the
/// non-orthogonal center core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ortho {
    None,
    /// Cores `0..k` are left-orthogonal.
    Left(usize),
    /// Cores `k+1..d` are right-orthogonal.
    Right(usize),
}

/// Sweep direction for orthogonalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Left-orthogonalize from the first core towards the center.
    Left,
    /// Right-orthogonalize from the last core towards the center.
    Right,
}

/// A rank that [`TensorTrain::random`] had to lower to the feasible maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankClamp {
    pub bond: usize,
    pub requested: usize,
    pub used: usize,
}

/// Tensor in TT format. Core `k` has shape `r_k x n_k x r_{k+1}` with
/// `r_0 = r_d = 1`, stored with the left rank index running fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    cores: Vec<DenseTensor>,
    ortho: Ortho,
    approx: bool,
}

impl TensorTrain {
    /// Validates the rank chain of `cores`. The result carries no orthogonality marker.
    pub fn from_cores(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(violation("a tensor train needs at least one core"));
        }
        for (k, c) in cores.iter().enumerate() {
            if c.dims().len() != 3 {
                return Err(mismatch(format!("core {k} has order {}, expected 3", c.dims().len())));
            }
        }
        if cores[0].dims()[0] != 1 || cores[cores.len() - 1].dims()[2] != 1 {
            return Err(violation("boundary ranks must be one"));
        }
        for k in 1..cores.len() {
            if cores[k - 1].dims()[2] != cores[k].dims()[0] {
                return Err(mismatch(format!(
                    "rank chain broken between cores {} and {k}: {} vs {}",
                    k - 1,
                    cores[k - 1].dims()[2],
                    cores[k].dims()[0]
                )));
            }
        }
        Ok(TensorTrain { cores, ortho: Ortho::None, approx: false })
    }

    pub(crate) fn from_parts(cores: Vec<DenseTensor>, ortho: Ortho) -> Self {
        debug_assert!(TensorTrain::from_cores(cores.clone()).is_ok());
        TensorTrain { cores, ortho, approx: false }
    }

    /// Rank-one train `v₁ ⊗ v₂ ⊗ … ⊗ v_d`.
    pub fn rank1(vectors: &[Vec<f64>]) -> Result<Self> {
        let cores =
            vectors.iter().map(|v| DenseTensor::from_vec(&[1, v.len(), 1], v.clone())).collect::<Result<Vec<_>>>()?;
        Self::from_cores(cores)
    }

    /// Train with constant entry `value` (rank one).
    pub fn constant(dims: &[usize], value: f64) -> Result<Self> {
        let mut vecs: Vec<Vec<f64>> = dims.iter().map(|&n| vec![1.0; n]).collect();
        if let Some(v) = vecs.first_mut() {
            v.iter_mut().for_each(|x| *x = value);
        }
        Self::rank1(&vecs)
    }

    /// Seeded train with standard normal core entries.
    ///
    /// `ranks` is the full chain `r_0..r_d`. Interior ranks above
    /// `min(Π_{i<k} n_i, Π_{i≥k} n_i)` are lowered and reported.
    pub fn random(dims: &[usize], ranks: &[usize], seed: u64) -> Result<(Self, Vec<RankClamp>)> {
        let d = dims.len();
        if d == 0 || ranks.len() != d + 1 {
            return Err(violation(format!("rank chain of length {} for {d} dimensions", ranks.len())));
        }
        if ranks[0] != 1 || ranks[d] != 1 || ranks.contains(&0) || dims.contains(&0) {
            return Err(violation("ranks and dimensions must be positive with r_0 = r_d = 1"));
        }
        let mut used = ranks.to_vec();
        let mut clamps = Vec::new();
        for k in 1..d {
            let left = dims[..k].iter().fold(1u128, |a, &n| a.saturating_mul(n as u128));
            let right = dims[k..].iter().fold(1u128, |a, &n| a.saturating_mul(n as u128));
            let cap = left.min(right).min(usize::MAX as u128) as usize;
            if used[k] > cap {
                log::warn!("rank {} at bond {k} clamped to {cap}", used[k]);
                clamps.push(RankClamp { bond: k, requested: used[k], used: cap });
                used[k] = cap;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cores = (0..d)
            .map(|k| {
                let shape = [used[k], dims[k], used[k + 1]];
                let n = shape.iter().product();
                let data: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                DenseTensor::from_vec(&shape, data).expect("shape matches")
            })
            .collect();
        Ok((Self::from_cores(cores)?, clamps))
    }

    pub fn d(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Full rank chain `r_0..r_d`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dims()[0]).collect();
        r.push(1);
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored floating point values.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    pub fn core(&self, k: usize) -> &DenseTensor {
        &self.cores[k]
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<DenseTensor> {
        self.cores
    }

    /// Mutable access to a core; clears the orthogonality marker.
    pub fn core_mut(&mut self, k: usize) -> &mut DenseTensor {
        self.ortho = Ortho::None;
        self.approx = false;
        &mut self.cores[k]
    }

    pub fn ortho(&self) -> Ortho {
        self.ortho
    }

    /// True when the orthogonality was produced by a Q-less fast path and is
    /// only guaranteed up to the weights of the discarded directions.
    pub fn is_approx_ortho(&self) -> bool {
        self.approx
    }

    pub(crate) fn set_ortho(&mut self, ortho: Ortho, approx: bool) {
        self.ortho = ortho;
        self.approx = approx;
    }

    pub(crate) fn cores_mut_keep_marker(&mut self) -> &mut Vec<DenseTensor> {
        &mut self.cores
    }

    /// Index of the core that carries the norm, if the marker names one.
    pub fn center(&self) -> Option<usize> {
        match self.ortho {
            Ortho::Left(k) | Ortho::Right(k) => Some(k),
            Ortho::None => None,
        }
    }

    /// `true` when all cores but the last are left-orthogonal.
    pub fn is_left_orthogonal(&self) -> bool {
        self.ortho == Ortho::Left(self.d() - 1)
    }

    /// `true` when all cores but the first are right-orthogonal.
    pub fn is_right_orthogonal(&self) -> bool {
        self.ortho == Ortho::Right(0)
    }

    /// Multiplies the tensor by `alpha`, keeping orthogonality.
    pub fn scale(&mut self, alpha: f64) {
        let k = self.center().unwrap_or(0);
        self.cores[k].scale(alpha);
    }

    pub fn scaled(mut self, alpha: f64) -> Self {
        self.scale(alpha);
        self
    }

    /// Train of the same tensor with its modes in reverse order. Left and
    /// right orthogonality swap roles.
    pub fn reversed(&self) -> TensorTrain {
        let d = self.d();
        let cores = self.cores.iter().rev().map(|c| c.permute(&[2, 1, 0])).collect();
        let ortho = match self.ortho {
            Ortho::None => Ortho::None,
            Ortho::Left(k) => Ortho::Right(d - 1 - k),
            Ortho::Right(k) => Ortho::Left(d - 1 - k),
        };
        TensorTrain { cores, ortho, approx: self.approx }
    }

    /// Dense tensor with the first mode index running fastest.
    pub fn to_full(&self) -> Result<DenseTensor> {
        let dims = self.dims();
        let entries = dims.iter().fold(1u128, |a, &n| a.saturating_mul(n as u128));
        if entries > DENSE_ORACLE_LIMIT {
            return Err(Error::OracleTooLarge { entries, limit: DENSE_ORACLE_LIMIT });
        }
        let mut acc = vec![1.0];
        let mut rows = 1usize;
        for c in &self.cores {
            let (r0, n, r1) = (c.dims()[0], c.dims()[1], c.dims()[2]);
            let mut next = vec![0.0; rows * n * r1];
            gemm(1.0, MatRef::col_major(&acc, rows, r0), c.matrix(1), 0.0, MatMut::col_major(&mut next, rows, n * r1))?;
            acc = next;
            rows *= n;
        }
        DenseTensor::from_vec(&dims, acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank1_full_is_outer_product() {
        let x = TensorTrain::rank1(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let f = x.to_full().unwrap();
        assert_eq!(f.data(), &[3.0, 6.0, 4.0, 8.0]);
    }

    #[test]
    fn broken_chain_is_rejected() {
        let a = DenseTensor::zeros(&[1, 2, 3]);
        let b = DenseTensor::zeros(&[2, 2, 1]);
        assert!(matches!(TensorTrain::from_cores(vec![a, b]), Err(Error::DimensionMismatch(_))));
        assert!(TensorTrain::random(&[2, 2], &[1, 2], 0).is_err());
    }

    #[test]
    fn random_clamps_ranks() {
        let (x, clamps) = TensorTrain::random(&[2, 3, 4], &[1, 5, 5, 1], 7).unwrap();
        assert_eq!(x.ranks(), vec![1, 2, 4, 1]);
        assert_eq!(clamps.len(), 2);
        assert_eq!(clamps[0], RankClamp { bond: 1, requested: 5, used: 2 });
        let (y, _) = TensorTrain::random(&[2, 3, 4], &[1, 5, 5, 1], 7).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn oracle_guard() {
        let x = TensorTrain::constant(&[100, 100, 101], 1.0).unwrap();
        assert!(matches!(x.to_full(), Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn reversal_reverses_modes() {
        let (x, _) = TensorTrain::random(&[2, 3, 4], &[1, 2, 3, 1], 3).unwrap();
        let f = x.to_full().unwrap();
        let g = x.reversed().to_full().unwrap();
        assert_eq!(g.dims(), &[4, 3, 2]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert!((f.get(&[i, j, k]) - g.get(&[k, j, i])).abs() < 1e-12);
                }
            }
        }
    }
}
