use crate::dense::{axpy, dot, norm2};
use crate::error::{violation, Result};

/// Outcome of [`dense_gmres`].
#[derive(Debug, Clone)]
pub struct DenseGmresResult {
    pub x: Vec<f64>,
    /// `b − A·x` of the returned `x`.
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Restarted GMRES on plain vectors, stopping at `‖b − A·x‖ ≤ abs_tol`.
///
/// Orthogonalization is modified Gram-Schmidt with a second pass when the
/// new vector lost more than 30% of its norm. The returned residual is
/// recomputed explicitly.
pub fn dense_gmres(
    apply: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    x0: &[f64],
    abs_tol: f64,
    max_iters: usize,
    restart: usize,
) -> Result<DenseGmresResult> {
    if b.len() != x0.len() {
        return Err(violation("initial guess and right-hand side differ in length"));
    }
    if restart == 0 {
        return Err(violation("restart length must be positive"));
    }
    let n = b.len();
    let mut x = x0.to_vec();
    let mut total = 0;
    loop {
        let ax = apply(&x)?;
        let mut r = b.to_vec();
        axpy(-1.0, &ax, &mut r);
        let beta = norm2(&r);
        if beta <= abs_tol || total >= max_iters || beta == 0.0 {
            return Ok(DenseGmresResult {
                x,
                residual: r,
                residual_norm: beta,
                iterations: total,
                converged: beta <= abs_tol,
            });
        }
        let m = restart.min(max_iters - total).min(n);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        r.iter_mut().for_each(|e| *e /= beta);
        v.push(r);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rots: Vec<(f64, f64)> = Vec::with_capacity(m);
        let mut g = vec![beta];
        for k in 0..m {
            let mut w = apply(&v[k])?;
            let before = norm2(&w);
            let mut h = vec![0.0; k + 2];
            for (j, vj) in v.iter().enumerate() {
                let c = dot(vj, &w);
                axpy(-c, vj, &mut w);
                h[j] += c;
            }
            if norm2(&w) < 0.7 * before {
                for (j, vj) in v.iter().enumerate() {
                    let c = dot(vj, &w);
                    axpy(-c, vj, &mut w);
                    h[j] += c;
                }
            }
            let hn = norm2(&w);
            h[k + 1] = hn;
            for (i, &(cs, sn)) in rots.iter().enumerate() {
                let (p, q) = (h[i], h[i + 1]);
                h[i] = cs * p + sn * q;
                h[i + 1] = -sn * p + cs * q;
            }
            let rr = h[k].hypot(h[k + 1]);
            let (cs, sn) = if rr == 0.0 { (1.0, 0.0) } else { (h[k] / rr, h[k + 1] / rr) };
            h[k] = rr;
            h[k + 1] = 0.0;
            rots.push((cs, sn));
            g.push(-sn * g[k]);
            g[k] *= cs;
            cols.push(h);
            total += 1;
            if g[k + 1].abs() <= abs_tol || hn <= 1e-14 * before {
                break;
            }
            w.iter_mut().for_each(|e| *e /= hn);
            v.push(w);
        }
        let steps = cols.len();
        let mut y = g[..steps].to_vec();
        for k in (0..steps).rev() {
            let mut s = y[k];
            for l in k + 1..steps {
                s -= cols[l][k] * y[l];
            }
            y[k] = if cols[k][k] != 0.0 { s / cols[k][k] } else { 0.0 };
        }
        for (vj, &yj) in v.iter().zip(&y) {
            axpy(yj, vj, &mut x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::Matrix;

    fn matvec(m: &Matrix) -> impl FnMut(&[f64]) -> Result<Vec<f64>> + '_ {
        move |x| Ok((0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)] * x[j]).sum()).collect())
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 30;
        let m = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if j == i + 1 {
                -1.5
            } else if i == j + 1 {
                -0.5
            } else {
                0.0
            }
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let mut f = matvec(&m);
        let out = dense_gmres(&mut f, &b, &vec![0.0; n], 1e-12, 200, 10).unwrap();
        assert!(out.converged);
        let ax = f(&out.x).unwrap();
        let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        assert!(res <= 1e-12);
        assert!((res - out.residual_norm).abs() < 1e-14);
    }

    #[test]
    fn exact_guess_needs_no_iterations() {
        let m = Matrix::identity(4);
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let out = dense_gmres(&mut matvec(&m), &b, &b, 1e-14, 10, 5).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
    }
}
