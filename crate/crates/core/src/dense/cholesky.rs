use super::flops::{self, FlopKind};
use super::matrix::{MatRef, Matrix};
use crate::error::{mismatch, Error, Result};

/// Cholesky factor `L` of `G + shift·I` (lower triangular, `LLᵀ = G + shift·I`).
#[derive(Debug, Clone)]
pub struct Cholesky {
    pub l: Matrix,
    pub shift: f64,
}

/// Cholesky of a symmetric positive (semi-)definite matrix.
///
/// Tries no shift first, then `1e-14·tr(G)` growing tenfold up to
/// `1e-8·tr(G)`. Each attempt books `n³/3` flops.
pub fn cholesky_spd(g: MatRef<'_>) -> Result<Cholesky> {
    let n = g.rows();
    if g.cols() != n {
        return Err(mismatch(format!("Cholesky of non-square {}x{}", n, g.cols())));
    }
    let trace: f64 = (0..n).map(|i| g.at(i, i)).sum();
    let mut shifts = vec![0.0];
    let mut s = 1e-14 * trace;
    while s <= 1e-8 * trace * (1.0 + 1e-12) && s > 0.0 {
        shifts.push(s);
        s *= 10.0;
    }
    for &shift in &shifts {
        flops::record(FlopKind::Cholesky, (n * n * n / 3).max(1) as u64);
        if let Some(l) = try_factor(g, shift) {
            return Ok(Cholesky { l, shift });
        }
    }
    Err(Error::IndefiniteGram { shift: *shifts.last().unwrap() })
}

fn try_factor(g: MatRef<'_>, shift: f64) -> Option<Matrix> {
    let n = g.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = g.at(j, j) + shift;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = 0.5 * (g.at(i, j) + g.at(j, i));
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Some(l)
}

/// `X = B·R⁻¹` for upper triangular `R`, counting `m·n²` flops.
pub fn solve_upper_right(b: MatRef<'_>, r: MatRef<'_>) -> Result<Matrix> {
    let n = r.rows();
    if r.cols() != n || b.cols() != n {
        return Err(mismatch("triangular solve shapes"));
    }
    let m = b.rows();
    flops::record(FlopKind::Contract, (m * n * n) as u64);
    let mut x = b.to_owned();
    for j in 0..n {
        for k in 0..j {
            let rkj = r.at(k, j);
            if rkj != 0.0 {
                let (src, dst) = split_cols(&mut x, k, j);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= s * rkj;
                }
            }
        }
        let inv = 1.0 / r.at(j, j);
        for v in x.col_mut(j) {
            *v *= inv;
        }
    }
    Ok(x)
}

// Shared access to column `a` and mutable access to column `b`, `a < b`.
fn split_cols(x: &mut Matrix, a: usize, b: usize) -> (&[f64], &mut [f64]) {
    let rows = x.rows();
    let s = x.stride();
    let data = &mut x.as_mut().data[..];
    let (lo, hi) = data.split_at_mut(b * s);
    (&lo[a * s..a * s + rows], &mut hi[..rows])
}

/// Solves `L·X = B` in place for lower triangular `L`.
pub fn solve_lower(l: MatRef<'_>, b: &mut Matrix) {
    let n = l.rows();
    flops::record(FlopKind::Contract, (n * n * b.cols()) as u64);
    for c in 0..b.cols() {
        let x = b.col_mut(c);
        for i in 0..n {
            let mut v = x[i];
            for (k, xk) in x.iter().enumerate().take(i) {
                v -= l.at(i, k) * xk;
            }
            x[i] = v / l.at(i, i);
        }
    }
}

/// Solves `Lᵀ·X = B` in place for lower triangular `L`.
pub fn solve_lower_transposed(l: MatRef<'_>, b: &mut Matrix) {
    let n = l.rows();
    flops::record(FlopKind::Contract, (n * n * b.cols()) as u64);
    for c in 0..b.cols() {
        let x = b.col_mut(c);
        for i in (0..n).rev() {
            let mut v = x[i];
            for (k, xk) in x.iter().enumerate().skip(i + 1) {
                v -= l.at(k, i) * xk;
            }
            x[i] = v / l.at(i, i);
        }
    }
}
