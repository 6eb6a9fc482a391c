use crate::dense::{gemm, DenseTensor, MatMut, MatRef, Matrix};
use crate::error::{mismatch, Result};

/// Fused dimension from which the precontracted tensors get padded strides.
pub const PAD_THRESHOLD: usize = 64;

/// Projected operator `Z = (L ⊗ A_j ⊗ R)·Y` of one site, prepared for three
/// GEMM stages with large fused dimensions.
///
/// Environments use the index order `(bra, operator, ket)`: the left one has
/// shape `r0 x rA0 x r0`, the right one `r1 x rA1 x r1`. Vectors `Y`, `Z` are
/// cores of shape `r0 x n x r1` in storage order.
#[derive(Debug, Clone)]
pub struct LocalOp {
    r0: usize,
    n: usize,
    r1: usize,
    ra0: usize,
    ra1: usize,
    /// `Â1[(a, α), a'] = L[a', α, a]`
    a1: Matrix,
    /// `Â2[(i, β), (i', α)] = A[α, i', i, β]`
    a2: Matrix,
    /// `Â3[b, (b', β)] = R[b', β, b]`
    a3: Matrix,
    padded: bool,
}

/// Builds the reordered tensors of a local operator.
pub fn prepare_local_op(left: &DenseTensor, core: &DenseTensor, right: &DenseTensor) -> Result<LocalOp> {
    let (ld, cd, rd) = (left.dims(), core.dims(), right.dims());
    if ld.len() != 3 || cd.len() != 4 || rd.len() != 3 {
        return Err(mismatch("local operator expects 3-way environments and a 4-way core"));
    }
    let (r0, ra0, r1, ra1, n) = (ld[0], ld[1], rd[0], rd[1], cd[1]);
    if ld[2] != r0 || rd[2] != r1 || cd[0] != ra0 || cd[3] != ra1 || cd[2] != n {
        return Err(mismatch(format!("environments {ld:?}, {rd:?} do not fit core {cd:?}")));
    }
    let fused = [r0 * n, r1 * ra1, n * ra1, n * ra0, r1 * r0, r0 * ra0, n * r1];
    let padded = fused.iter().any(|&f| f >= PAD_THRESHOLD);
    let store = |m: MatRef<'_>| {
        let mut out = if padded { Matrix::zeros_padded(m.rows(), m.cols()) } else { Matrix::zeros(m.rows(), m.cols()) };
        for j in 0..m.cols() {
            for (i, v) in out.col_mut(j).iter_mut().enumerate() {
                *v = m.at(i, j);
            }
        }
        out
    };
    let a1 = store(left.permute(&[2, 1, 0]).matrix(2));
    let a2 = store(core.permute(&[2, 3, 1, 0]).matrix(2));
    let a3 = store(right.matrix(2).t());
    Ok(LocalOp { r0, n, r1, ra0, ra1, a1, a2, a3, padded })
}

impl LocalOp {
    /// Core shape `(r0, n, r1)` the operator acts on.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.r0, self.n, self.r1)
    }

    pub fn len(&self) -> usize {
        self.r0 * self.n * self.r1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_padded(&self) -> bool {
        self.padded
    }

    /// Exact flop count of one [`LocalOp::apply`].
    pub fn apply_flops(&self) -> u64 {
        let (r0, n, r1, ra0, ra1) = (self.r0, self.n, self.r1, self.ra0, self.ra1);
        2 * (ra1 * r0 * n * r1 * r1 + ra0 * r1 * r0 * n * ra1 * n + n * r1 * r0 * ra0 * r0) as u64
    }

    /// `Z = op(Y)`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut z = vec![0.0; self.len()];
        self.apply_into(y, &mut z)?;
        Ok(z)
    }

    pub fn apply_into(&self, y: &[f64], z: &mut [f64]) -> Result<()> {
        let (r0, n, r1, ra0, ra1) = (self.r0, self.n, self.r1, self.ra0, self.ra1);
        if y.len() != self.len() || z.len() != self.len() {
            return Err(mismatch(format!("local vector of length {} for shape {:?}", y.len(), self.shape())));
        }
        // T1[b', a, i, β] = Σ_b Y[a, i, b]·R[b', β, b]
        let blk1 = r1 * r0 * n;
        let mut t1 = vec![0.0; blk1 * ra1];
        let ym = MatRef::col_major(y, r0 * n, r1);
        for beta in 0..ra1 {
            let c = MatMut::new(&mut t1[beta * blk1..(beta + 1) * blk1], r0 * n, r1, r1, 1);
            gemm(1.0, ym, self.a3.as_ref().sub(0, beta * r1, r1, r1), 0.0, c)?;
        }
        // T2[i', b', a, α] = Σ_{i,β} T1[b', a, i, β]·A[α, i', i, β]
        let blk2 = n * r1 * r0;
        let mut t2 = vec![0.0; blk2 * ra0];
        let t1m = MatRef::col_major(&t1, r1 * r0, n * ra1);
        for alpha in 0..ra0 {
            let c = MatMut::new(&mut t2[alpha * blk2..(alpha + 1) * blk2], r1 * r0, n, n, 1);
            gemm(1.0, t1m, self.a2.as_ref().sub(0, alpha * n, n * ra1, n), 0.0, c)?;
        }
        // Z[a', i', b'] = Σ_{a,α} T2[i', b', a, α]·L[a', α, a]
        let t2m = MatRef::col_major(&t2, n * r1, r0 * ra0);
        gemm(1.0, t2m, self.a1.as_ref(), 0.0, MatMut::new(z, n * r1, r0, r0, 1))?;
        Ok(())
    }
}

/// Free-function form of [`LocalOp::apply`].
pub fn local_apply(op: &LocalOp, y: &[f64]) -> Result<Vec<f64>> {
    op.apply(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::flops::measure;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
        let n = dims.iter().product();
        DenseTensor::from_vec(dims, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn naive(l: &DenseTensor, op: &DenseTensor, r: &DenseTensor, y: &DenseTensor) -> DenseTensor {
        let (r0, ra0) = (l.dims()[0], l.dims()[1]);
        let (r1, ra1) = (r.dims()[0], r.dims()[1]);
        let n = op.dims()[1];
        let mut z = DenseTensor::zeros(&[r0, n, r1]);
        for ap in 0..r0 {
            for ip in 0..n {
                for bp in 0..r1 {
                    let mut s = 0.0;
                    for al in 0..ra0 {
                        for be in 0..ra1 {
                            for a in 0..r0 {
                                for i in 0..n {
                                    for b in 0..r1 {
                                        s += l.get(&[ap, al, a])
                                            * op.get(&[al, ip, i, be])
                                            * r.get(&[bp, be, b])
                                            * y.get(&[a, i, b]);
                                    }
                                }
                            }
                        }
                    }
                    z.set(&[ap, ip, bp], s);
                }
            }
        }
        z
    }

    #[test]
    fn matches_naive_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (r0, n, r1, ra0, ra1) in [(3, 4, 2, 2, 3), (1, 5, 3, 1, 2), (2, 3, 1, 2, 1)] {
            let l = random(&[r0, ra0, r0], &mut rng);
            let a = random(&[ra0, n, n, ra1], &mut rng);
            let r = random(&[r1, ra1, r1], &mut rng);
            let y = random(&[r0, n, r1], &mut rng);
            let op = prepare_local_op(&l, &a, &r).unwrap();
            let (z, f) = measure(|| op.apply(y.data()).unwrap());
            let expect = naive(&l, &a, &r, &y);
            for (p, q) in z.iter().zip(expect.data()) {
                assert!((p - q).abs() < 1e-12);
            }
            assert_eq!(f.contract, op.apply_flops());
        }
    }

    #[test]
    fn identity_pieces_give_identity() {
        let (r0, n, r1) = (3, 4, 5);
        let eye = |r: usize| {
            let mut t = DenseTensor::zeros(&[r, 1, r]);
            for i in 0..r {
                t.set(&[i, 0, i], 1.0);
            }
            t
        };
        let mut a = DenseTensor::zeros(&[1, n, n, 1]);
        for i in 0..n {
            a.set(&[0, i, i, 0], 1.0);
        }
        let op = prepare_local_op(&eye(r0), &a, &eye(r1)).unwrap();
        let y: Vec<f64> = (0..r0 * n * r1).map(|v| v as f64).collect();
        assert_eq!(op.apply(&y).unwrap(), y);
    }

    #[test]
    fn large_fused_dimension_is_padded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (r0, n, r1, ra) = (20, 10, 20, 2);
        let l = random(&[r0, ra, r0], &mut rng);
        let a = random(&[ra, n, n, ra], &mut rng);
        let r = random(&[r1, ra, r1], &mut rng);
        let op = prepare_local_op(&l, &a, &r).unwrap();
        assert!(op.is_padded());
        let y = random(&[r0, n, r1], &mut rng);
        let z = op.apply(y.data()).unwrap();
        // Compare against the same operator built without padding.
        let mut plain = op.clone();
        plain.a1 = plain.a1.as_ref().to_owned();
        plain.a2 = plain.a2.as_ref().to_owned();
        plain.a3 = plain.a3.as_ref().to_owned();
        assert_eq!(plain.apply(y.data()).unwrap(), z);
    }
}
