use super::flops::{self, FlopKind};
use super::matrix::{MatMut, MatRef, Matrix};
use crate::error::{mismatch, Result};

/// `C ← α·A·B + β·C` on strided views, counting `2mnk` flops.
pub fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, mut c: MatMut<'_>) -> Result<()> {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if b.rows != k || c.rows != m || c.cols != n {
        return Err(mismatch(format!(
            "gemm of {}x{} by {}x{} into {}x{}",
            a.rows, a.cols, b.rows, b.cols, c.rows, c.cols
        )));
    }
    if m == 0 || n == 0 {
        return Ok(());
    }
    flops::record(FlopKind::Contract, 2 * (m * n * k) as u64);
    if k == 0 {
        for j in 0..n {
            for i in 0..m {
                let v = &mut c.data[i * c.rs + j * c.cs];
                *v = if beta == 0.0 { 0.0 } else { beta * *v };
            }
        }
        return Ok(());
    }
    // SAFETY: the views were bounds-checked on construction, so every index
    // `i*rs + j*cs` touched by dgemm lies inside the borrowed slices, and `c`
    // is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.ptr(),
            a.rs as isize,
            a.cs as isize,
            b.ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.ptr(),
            c.rs as isize,
            c.cs as isize,
        );
    }
    Ok(())
}

/// Dense matrix product `A·B` as a new compact matrix.
pub fn contract(a: MatRef<'_>, b: MatRef<'_>) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(mismatch(format!("cannot contract {}x{} with {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    let mut c = Matrix::zeros(a.rows, b.cols);
    gemm(1.0, a, b, 0.0, c.as_mut())?;
    Ok(c)
}

/// Dot product of two equally long slices, counting `2n` flops.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    flops::record(FlopKind::Contract, 2 * x.len() as u64);
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `y ← y + α·x`, counting `2n` flops.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    flops::record(FlopKind::Contract, 2 * x.len() as u64);
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean norm, rescaled when the plain sum of squares under- or overflows.
pub fn norm2(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum();
    if s.is_finite() && (s > 1e-280 || s == 0.0 && x.iter().all(|&v| v == 0.0)) {
        return s.sqrt();
    }
    MatRef::col_major(x, x.len(), 1).frobenius_norm()
}
