use super::gemm::gemm;
use super::matrix::{MatMut, MatRef, Matrix};
use crate::error::{mismatch, Result};

/// Dense tensor stored with the first index running fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        DenseTensor { dims: dims.to_vec(), data: vec![0.0; dims.iter().product()] }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(mismatch(format!("{} values for tensor of shape {dims:?}", data.len())));
        }
        Ok(DenseTensor { dims: dims.to_vec(), data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        let mut step = 1;
        for (&i, &n) in idx.iter().zip(&self.dims) {
            debug_assert!(i < n);
            off += i * step;
            step *= n;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// Same data under a different shape with equal size.
    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        if dims.iter().product::<usize>() != self.data.len() {
            return Err(mismatch(format!("cannot reshape {:?} into {dims:?}", self.dims)));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    /// Matrix view fusing the first `split` indices into rows.
    pub fn matrix(&self, split: usize) -> MatRef<'_> {
        let rows: usize = self.dims[..split].iter().product();
        let cols: usize = self.dims[split..].iter().product();
        MatRef::col_major(&self.data, rows, cols)
    }

    pub fn matrix_mut(&mut self, split: usize) -> MatMut<'_> {
        let rows: usize = self.dims[..split].iter().product();
        let cols: usize = self.dims[split..].iter().product();
        MatMut::col_major(&mut self.data, rows, cols)
    }

    /// Builds a tensor from a matrix by unfolding the given shape.
    pub fn from_matrix(m: &Matrix, dims: &[usize]) -> Result<Self> {
        Self::from_vec(dims, m.to_col_major())
    }

    pub fn to_matrix(&self, split: usize) -> Matrix {
        self.matrix(split).to_owned()
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    pub fn norm(&self) -> f64 {
        MatRef::col_major(&self.data, self.data.len(), 1).frobenius_norm()
    }

    /// Index permutation: result index `k` is input index `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> DenseTensor {
        let nd = self.dims.len();
        assert_eq!(perm.len(), nd);
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return self.clone();
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut in_strides = vec![1usize; nd];
        for k in 1..nd {
            in_strides[k] = in_strides[k - 1] * self.dims[k - 1];
        }
        let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        if self.data.is_empty() {
            return DenseTensor { dims: new_dims, data: out };
        }
        let mut idx = vec![0usize; nd];
        let mut off = 0usize;
        let inner = new_dims[0];
        let s0 = strides[0];
        loop {
            for i in 0..inner {
                out.push(self.data[off + i * s0]);
            }
            let mut k = 1;
            loop {
                if k == nd {
                    return DenseTensor { dims: new_dims, data: out };
                }
                idx[k] += 1;
                off += strides[k];
                if idx[k] < new_dims[k] {
                    break;
                }
                off -= strides[k] * new_dims[k];
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Contracts `a` and `b` over the paired axes. The result carries the free
/// axes of `a` followed by the free axes of `b`, each in original order.
pub fn tensordot(a: &DenseTensor, a_axes: &[usize], b: &DenseTensor, b_axes: &[usize]) -> Result<DenseTensor> {
    if a_axes.len() != b_axes.len() {
        return Err(mismatch("tensordot axis lists differ in length"));
    }
    for (&x, &y) in a_axes.iter().zip(b_axes) {
        if a.dims[x] != b.dims[y] {
            return Err(mismatch(format!("tensordot axis sizes {} vs {}", a.dims[x], b.dims[y])));
        }
    }
    let a_free: Vec<usize> = (0..a.dims.len()).filter(|k| !a_axes.contains(k)).collect();
    let b_free: Vec<usize> = (0..b.dims.len()).filter(|k| !b_axes.contains(k)).collect();
    let mut pa = a_free.clone();
    pa.extend_from_slice(a_axes);
    let mut pb = b_axes.to_vec();
    pb.extend_from_slice(&b_free);
    let ap = a.permute(&pa);
    let bp = b.permute(&pb);
    let m: usize = a_free.iter().map(|&k| a.dims[k]).product();
    let k: usize = a_axes.iter().map(|&x| a.dims[x]).product();
    let n: usize = b_free.iter().map(|&x| b.dims[x]).product();
    let mut dims: Vec<usize> = a_free.iter().map(|&x| a.dims[x]).collect();
    dims.extend(b_free.iter().map(|&x| b.dims[x]));
    let mut out = DenseTensor::zeros(&dims);
    gemm(
        1.0,
        MatRef::col_major(&ap.data, m, k),
        MatRef::col_major(&bp.data, k, n),
        0.0,
        MatMut::col_major(&mut out.data, m, n),
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(dims: &[usize]) -> DenseTensor {
        let n: usize = dims.iter().product();
        DenseTensor::from_vec(dims, (0..n).map(|x| x as f64 * 0.5 - 3.0).collect()).unwrap()
    }

    #[test]
    fn permute_moves_indices() {
        let t = seq(&[2, 3, 4]);
        let p = t.permute(&[2, 0, 1]);
        assert_eq!(p.dims(), &[4, 2, 3]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(p.get(&[k, i, j]), t.get(&[i, j, k]));
                }
            }
        }
    }

    #[test]
    fn tensordot_matches_loops() {
        let a = seq(&[2, 3, 4]);
        let b = seq(&[4, 5, 3]);
        let c = tensordot(&a, &[1, 2], &b, &[2, 0]).unwrap();
        assert_eq!(c.dims(), &[2, 5]);
        for i in 0..2 {
            for l in 0..5 {
                let mut s = 0.0;
                for j in 0..3 {
                    for k in 0..4 {
                        s += a.get(&[i, j, k]) * b.get(&[k, l, j]);
                    }
                }
                assert!((c.get(&[i, l]) - s).abs() < 1e-12);
            }
        }
    }
}
