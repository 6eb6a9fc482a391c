use crate::dense::{cholesky_spd, contract, gemm, solve_lower, solve_lower_transposed, MatRef, Matrix};
use crate::error::{mismatch, Result};

/// `V' = (I − Q̃(Q̃ᵀQ̃)⁻¹Q̃ᵀ)V` for a nearly orthonormal `Q̃`.
///
/// The Gram matrix is factorized with [`cholesky_spd`], so `V'` is
/// orthogonal to the span of `Q̃` even when `Q̃ᵀQ̃` is visibly off the identity.
pub fn stable_orthogonal_complement(q: MatRef<'_>, v: MatRef<'_>) -> Result<Matrix> {
    Ok(complement_with_coefficients(q, v)?.0)
}

/// [`stable_orthogonal_complement`] that also returns `C` with `V = Q̃·C + V'`.
pub fn complement_with_coefficients(q: MatRef<'_>, v: MatRef<'_>) -> Result<(Matrix, Matrix)> {
    if q.rows() != v.rows() {
        return Err(mismatch(format!("complement of {} rows against {} rows", v.rows(), q.rows())));
    }
    let g = contract(q.t(), q)?;
    let chol = cholesky_spd(g.as_ref())?;
    let mut c = contract(q.t(), v)?;
    solve_lower(chol.l.as_ref(), &mut c);
    solve_lower_transposed(chol.l.as_ref(), &mut c);
    let mut out = v.to_owned();
    gemm(-1.0, q, c.as_ref(), 1.0, out.as_mut())?;
    Ok((out, c))
}
