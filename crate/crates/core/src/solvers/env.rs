use crate::dense::{tensordot, DenseTensor};
use crate::error::{mismatch, violation, Result};
use crate::fast::{prepare_local_op, LocalOp};
use crate::tt::{TensorTrain, TtOperator};

/// `W'[b', β, b] = Σ X[a', i', b']·W[a', α, a]·A[α, i', i, β]·X[a, i, b]`.
///
/// Environments are ordered `(bra, operator, ket)`.
pub fn env_update_left(env: &DenseTensor, x: &DenseTensor, a: &DenseTensor) -> Result<DenseTensor> {
    check_op(env, x, a, 0, 0)?;
    let t1 = tensordot(env, &[2], x, &[0])?;
    let t2 = tensordot(&t1, &[1, 2], a, &[0, 2])?;
    Ok(tensordot(x, &[0, 1], &t2, &[0, 2])?.permute(&[0, 2, 1]))
}

/// `W[a', α, a] = Σ X[a', i', b']·A[α, i', i, β]·W'[b', β, b]·X[a, i, b]`.
pub fn env_update_right(env: &DenseTensor, x: &DenseTensor, a: &DenseTensor) -> Result<DenseTensor> {
    check_op(env, x, a, 2, 3)?;
    let t1 = tensordot(x, &[2], env, &[2])?;
    let t2 = tensordot(a, &[2, 3], &t1, &[1, 3])?;
    tensordot(x, &[1, 2], &t2, &[1, 3])
}

/// `w'[b', c'] = Σ X[a', i, b']·w[a', c]·B[c, i, c']`.
pub fn rhs_env_update_left(w: &DenseTensor, x: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    check_rhs(w, x, b, 0, 0)?;
    let t = tensordot(w, &[1], b, &[0])?;
    tensordot(x, &[0, 1], &t, &[0, 1])
}

/// `w[a', c] = Σ X[a', i, b']·B[c, i, c']·w'[b', c']`.
pub fn rhs_env_update_right(w: &DenseTensor, x: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    check_rhs(w, x, b, 2, 2)?;
    let t = tensordot(b, &[2], w, &[1])?;
    tensordot(x, &[1, 2], &t, &[1, 2])
}

fn check_op(env: &DenseTensor, x: &DenseTensor, a: &DenseTensor, xb: usize, ab: usize) -> Result<()> {
    let (e, xd, ad) = (env.dims(), x.dims(), a.dims());
    if e.len() != 3 || xd.len() != 3 || ad.len() != 4 {
        return Err(violation("environment update expects 3-way env, 3-way core and 4-way operator core"));
    }
    if e[0] != xd[xb] || e[2] != xd[xb] || e[1] != ad[ab] || ad[1] != xd[1] || ad[2] != xd[1] {
        return Err(violation(format!("environment {e:?} does not fit cores {xd:?}, {ad:?}")));
    }
    Ok(())
}

fn check_rhs(w: &DenseTensor, x: &DenseTensor, b: &DenseTensor, xb: usize, bb: usize) -> Result<()> {
    let (e, xd, bd) = (w.dims(), x.dims(), b.dims());
    if e.len() != 2 || xd.len() != 3 || bd.len() != 3 {
        return Err(violation("rhs environment update expects 2-way env and 3-way cores"));
    }
    if e[0] != xd[xb] || e[1] != bd[bb] || bd[1] != xd[1] {
        return Err(violation(format!("rhs environment {e:?} does not fit cores {xd:?}, {bd:?}")));
    }
    Ok(())
}

/// Operator and right-hand side environments of a train `X`.
///
/// Position `j` of the left lists holds the contraction of cores `0..j`,
/// position `j` of the right lists that of cores `j..d`. The boundary
/// entries are the scalar one.
#[derive(Debug, Clone)]
pub struct Environment {
    left: Vec<Option<DenseTensor>>,
    right: Vec<Option<DenseTensor>>,
    left_rhs: Vec<Option<DenseTensor>>,
    right_rhs: Vec<Option<DenseTensor>>,
}

fn one(order: usize) -> DenseTensor {
    DenseTensor::from_vec(&vec![1; order], vec![1.0]).expect("one entry")
}

impl Environment {
    pub fn new(d: usize) -> Self {
        let mut e = Environment {
            left: vec![None; d + 1],
            right: vec![None; d + 1],
            left_rhs: vec![None; d + 1],
            right_rhs: vec![None; d + 1],
        };
        e.left[0] = Some(one(3));
        e.right[d] = Some(one(3));
        e.left_rhs[0] = Some(one(2));
        e.right_rhs[d] = Some(one(2));
        e
    }

    pub fn d(&self) -> usize {
        self.left.len() - 1
    }

    fn get<'a>(v: &'a [Option<DenseTensor>], j: usize, what: &str) -> Result<&'a DenseTensor> {
        v.get(j).and_then(|e| e.as_ref()).ok_or_else(|| violation(format!("{what} environment {j} is not available")))
    }

    pub fn left(&self, j: usize) -> Result<&DenseTensor> {
        Self::get(&self.left, j, "left")
    }

    pub fn right(&self, j: usize) -> Result<&DenseTensor> {
        Self::get(&self.right, j, "right")
    }

    pub fn left_rhs(&self, j: usize) -> Result<&DenseTensor> {
        Self::get(&self.left_rhs, j, "left rhs")
    }

    pub fn right_rhs(&self, j: usize) -> Result<&DenseTensor> {
        Self::get(&self.right_rhs, j, "right rhs")
    }

    /// Recomputes position `j + 1` of the left lists from core `j`.
    pub fn update_left(&mut self, j: usize, x: &TensorTrain, a: &TtOperator, b: &TensorTrain) -> Result<()> {
        let l = env_update_left(self.left(j)?, x.core(j), a.core(j))?;
        let w = rhs_env_update_left(self.left_rhs(j)?, x.core(j), b.core(j))?;
        self.left[j + 1] = Some(l);
        self.left_rhs[j + 1] = Some(w);
        Ok(())
    }

    /// Recomputes position `j` of the right lists from core `j`.
    pub fn update_right(&mut self, j: usize, x: &TensorTrain, a: &TtOperator, b: &TensorTrain) -> Result<()> {
        let r = env_update_right(self.right(j + 1)?, x.core(j), a.core(j))?;
        let w = rhs_env_update_right(self.right_rhs(j + 1)?, x.core(j), b.core(j))?;
        self.right[j] = Some(r);
        self.right_rhs[j] = Some(w);
        Ok(())
    }

    /// Right environments of positions `d−1` down to `from`.
    pub fn build_right(&mut self, from: usize, x: &TensorTrain, a: &TtOperator, b: &TensorTrain) -> Result<()> {
        for j in (from..self.d()).rev() {
            self.update_right(j, x, a, b)?;
        }
        Ok(())
    }

    /// Projected operator of core `j`.
    pub fn local_op(&self, j: usize, a: &TtOperator) -> Result<LocalOp> {
        prepare_local_op(self.left(j)?, a.core(j), self.right(j + 1)?)
    }

    /// Projected right-hand side `b[a', i, b'] = Σ w_L[a', c]·B[c, i, c']·w_R[b', c']`.
    pub fn local_rhs(&self, j: usize, b: &TensorTrain) -> Result<DenseTensor> {
        let t = tensordot(self.left_rhs(j)?, &[1], b.core(j), &[0])?;
        let r = self.right_rhs(j + 1)?;
        if r.dims()[1] != t.dims()[2] {
            return Err(mismatch("rhs environments do not fit"));
        }
        tensordot(&t, &[2], r, &[1])
    }

    /// Environments of the reversed train.
    pub fn reversed(self) -> Self {
        let rev = |mut v: Vec<Option<DenseTensor>>| {
            v.reverse();
            v
        };
        Environment {
            left: rev(self.right),
            right: rev(self.left),
            left_rhs: rev(self.right_rhs),
            right_rhs: rev(self.left_rhs),
        }
    }
}
