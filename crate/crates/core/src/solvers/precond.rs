use log::debug;

use crate::dense::flops::{self, FlopKind};
use crate::dense::{svd_full, Matrix};
use crate::error::{violation, Error, Result};
use crate::tt::{truncate, TensorTrain, TtOperator};

use super::map::TtLinearMap;

/// Default relative floor on the singular values of the rank-one factors.
pub const DEFAULT_SV_FLOOR: f64 = 1e-12;

/// Two-sided preconditioner from the TT-rank-1 approximation of an operator.
///
/// With `Ã = Ã₁ ⊗ … ⊗ Ã_d` and `Ã_k = U_k S_k V_kᵀ`, the left factor is
/// `⊗ S_k^{-1/2} U_kᵀ` and the right factor `⊗ V_k S_k^{-1/2}`, so that
/// `P_left·Ã·P_right = I`. Both factors are rank-one TT operators and do not
/// increase the ranks of the trains they are applied to.
#[derive(Debug, Clone)]
pub struct RankOnePrecond {
    left: TtOperator,
    right: TtOperator,
    sv_floor: f64,
    floored: usize,
    symmetric: bool,
}

/// Builds the rank-one two-sided preconditioner of `a`.
///
/// Singular values below `sv_floor·s_max` of a factor are raised to that
/// floor before the inverse square root. Factors that are symmetric to
/// `1e-12` relative use `P_left = P_rightᵀ`, which keeps a symmetric operator
/// symmetric after preconditioning.
pub fn rank1_precond(a: &TtOperator, sv_floor: f64) -> Result<RankOnePrecond> {
    if !(0.0..1.0).contains(&sv_floor) {
        return Err(violation(format!("sv_floor must lie in [0, 1), got {sv_floor}")));
    }
    if a.row_dims() != a.col_dims() {
        return Err(violation("preconditioning needs a square operator"));
    }
    let approx = truncate(&a.as_train(), 0.0, 1)?;
    let mut left = Vec::with_capacity(a.d());
    let mut right = Vec::with_capacity(a.d());
    let mut floored = 0;
    let mut symmetric = true;
    for (k, core) in approx.cores().iter().enumerate() {
        let n = a.row_dims()[k];
        let m = Matrix::from_col_major(n, n, core.data().to_vec())?;
        let mnorm = m.frobenius_norm();
        if !(mnorm > 0.0) || !mnorm.is_finite() {
            return Err(Error::DegeneratePreconditioner(format!("rank-one factor {k} vanishes")));
        }
        flops::record(FlopKind::Svd, 14 * (n * n * n) as u64);
        let svd = flops::uncounted(|| svd_full(m.as_ref()));
        let floor = sv_floor * svd.s[0];
        let scale: Vec<f64> = svd
            .s
            .iter()
            .map(|&s| {
                if s < floor {
                    floored += 1;
                }
                1.0 / s.max(floor).sqrt()
            })
            .collect();
        if scale.iter().any(|s| !s.is_finite()) {
            return Err(Error::DegeneratePreconditioner(format!("factor {k} is singular and sv_floor is zero")));
        }
        let sym = m.max_abs_diff(&m.t().to_owned()) <= 1e-12 * mnorm;
        symmetric &= sym;
        // P_right = V S^{-1/2}; P_left = S^{-1/2} Uᵀ, or P_rightᵀ for symmetric factors.
        let pr = Matrix::from_fn(n, n, |i, j| svd.v[(i, j)] * scale[j]);
        let pl = if sym { pr.t().to_owned() } else { Matrix::from_fn(n, n, |i, j| scale[i] * svd.u[(j, i)]) };
        left.push(pl);
        right.push(pr);
    }
    if floored > 0 {
        debug!("rank-one preconditioner floored {floored} singular values");
    }
    Ok(RankOnePrecond {
        left: TtOperator::kron(&left)?,
        right: TtOperator::kron(&right)?,
        sv_floor,
        floored,
        symmetric,
    })
}

impl RankOnePrecond {
    pub fn left(&self) -> &TtOperator {
        &self.left
    }

    pub fn right(&self) -> &TtOperator {
        &self.right
    }

    pub fn sv_floor(&self) -> f64 {
        self.sv_floor
    }

    /// Number of singular values that were raised to the floor.
    pub fn floored(&self) -> usize {
        self.floored
    }

    /// Whether `P_left = P_rightᵀ`.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn apply_left(&self, x: &TensorTrain) -> Result<TensorTrain> {
        self.left.apply(x)
    }

    pub fn apply_right(&self, x: &TensorTrain) -> Result<TensorTrain> {
        self.right.apply(x)
    }
}

/// `P_left·A·P_right` as a linear map.
pub struct PreconditionedOp<'a> {
    a: &'a TtOperator,
    p: &'a RankOnePrecond,
}

impl<'a> PreconditionedOp<'a> {
    pub fn new(a: &'a TtOperator, p: &'a RankOnePrecond) -> Result<Self> {
        if a.col_dims() != p.right.row_dims() {
            return Err(violation("preconditioner does not match the operator"));
        }
        Ok(PreconditionedOp { a, p })
    }
}

impl TtLinearMap for PreconditionedOp<'_> {
    fn dims(&self) -> Vec<usize> {
        self.a.col_dims()
    }

    fn apply(&self, x: &TensorTrain) -> Result<TensorTrain> {
        self.p.apply_left(&self.a.apply(&self.p.apply_right(x)?)?)
    }

    fn is_symmetric(&self) -> bool {
        self.a.is_symmetric() && self.p.symmetric
    }
}
