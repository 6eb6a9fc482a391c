use crate::dense::{contract, gemm, DenseTensor, MatMut, MatRef, Matrix};
use crate::error::{mismatch, Result};

use super::ortho::orthogonalize;
use super::train::{Direction, Ortho, TensorTrain};

fn check_same_dims(x: &TensorTrain, y: &TensorTrain) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(mismatch(format!("mode sizes {:?} vs {:?}", x.dims(), y.dims())));
    }
    Ok(())
}

/// Inner product `⟨X, Y⟩` by a left-to-right contraction sweep.
pub fn dot(x: &TensorTrain, y: &TensorTrain) -> Result<f64> {
    check_same_dims(x, y)?;
    let mut e = Matrix::identity(1);
    for (cx, cy) in x.cores().iter().zip(y.cores()) {
        e = dot_step(&e, cx, cy)?;
    }
    Ok(e[(0, 0)])
}

/// `E' = Σ_i X[:, i, :]ᵀ E Y[:, i, :]` for a boundary `E` of shape `rX x rY`.
pub(crate) fn dot_step(e: &Matrix, cx: &DenseTensor, cy: &DenseTensor) -> Result<Matrix> {
    let (n, ry1) = (cy.dims()[1], cy.dims()[2]);
    let rx0 = cx.dims()[0];
    let mut t = vec![0.0; rx0 * n * ry1];
    gemm(1.0, e.as_ref(), cy.matrix(1), 0.0, MatMut::col_major(&mut t, rx0, n * ry1))?;
    contract(cx.matrix(2).t(), MatRef::col_major(&t, rx0 * n, ry1))
}

/// Frobenius norm. Trains with an orthogonality marker use their center
/// core (for fast-path markers this is accurate to the fast-path check);
/// others are left-orthogonalized in a copy.
pub fn norm(x: &TensorTrain) -> f64 {
    if let Some(k) = x.center() {
        return x.core(k).norm();
    }
    let mut y = x.clone();
    let d = y.d();
    orthogonalize(&mut y, Direction::Left, d - 1).expect("valid center");
    y.core(d - 1).norm()
}

/// `αX + βY` without truncation. Interior ranks add up; `d = 1` adds the cores.
pub fn axpby_raw(alpha: f64, x: &TensorTrain, beta: f64, y: &TensorTrain) -> Result<TensorTrain> {
    check_same_dims(x, y)?;
    let d = x.d();
    if d == 1 {
        let mut c = x.core(0).clone();
        for (a, b) in c.data_mut().iter_mut().zip(y.core(0).data()) {
            *a = alpha * *a + beta * b;
        }
        return TensorTrain::from_cores(vec![c]);
    }
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let (cx, cy) = (x.core(k), y.core(k));
        let (rx0, n, rx1) = (cx.dims()[0], cx.dims()[1], cx.dims()[2]);
        let (ry0, ry1) = (cy.dims()[0], cy.dims()[2]);
        let r0 = if k == 0 { 1 } else { rx0 + ry0 };
        let r1 = if k == d - 1 { 1 } else { rx1 + ry1 };
        let mut z = DenseTensor::zeros(&[r0, n, r1]);
        let (sx, sy) = if k == d - 1 { (alpha, beta) } else { (1.0, 1.0) };
        add_block(&mut z, cx, 0, 0, sx);
        add_block(&mut z, cy, if k == 0 { 0 } else { rx0 }, if k == d - 1 { 0 } else { rx1 }, sy);
        cores.push(z);
    }
    Ok(TensorTrain::from_parts(cores, Ortho::None))
}

// z[o0 + a, i, o1 + b] += s * c[a, i, b]
pub(crate) fn add_block(z: &mut DenseTensor, c: &DenseTensor, o0: usize, o1: usize, s: f64) {
    let (zr0, n) = (z.dims()[0], z.dims()[1]);
    let (r0, _, r1) = (c.dims()[0], c.dims()[1], c.dims()[2]);
    let src = c.data();
    let dst = z.data_mut();
    for b in 0..r1 {
        for i in 0..n {
            let so = i * r0 + b * r0 * n;
            let dof = o0 + i * zr0 + (o1 + b) * zr0 * n;
            for a in 0..r0 {
                dst[dof + a] += s * src[so + a];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_of_rank_one() {
        let x = TensorTrain::rank1(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(dot(&x, &x).unwrap(), 125.0);
        assert!((norm(&x) - 125f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn axpby_ranks_and_values() {
        let (x, _) = TensorTrain::random(&[2, 3, 2], &[1, 2, 2, 1], 1).unwrap();
        let (y, _) = TensorTrain::random(&[2, 3, 2], &[1, 1, 2, 1], 2).unwrap();
        let z = axpby_raw(2.0, &x, -0.5, &y).unwrap();
        assert_eq!(z.ranks(), vec![1, 3, 4, 1]);
        let (fx, fy, fz) = (x.to_full().unwrap(), y.to_full().unwrap(), z.to_full().unwrap());
        for k in 0..fz.len() {
            assert!((fz.data()[k] - 2.0 * fx.data()[k] + 0.5 * fy.data()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_core_axpby() {
        let x = TensorTrain::rank1(&[vec![1.0, 2.0]]).unwrap();
        let z = axpby_raw(1.0, &x, 1.0, &x).unwrap();
        assert_eq!(z.to_full().unwrap().data(), &[2.0, 4.0]);
    }
}
