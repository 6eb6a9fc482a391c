use log::{debug, info};

use crate::dense::{contract, householder_r, DenseTensor, MatRef, Matrix};
use crate::error::Result;
use crate::fast::LocalOp;
use crate::tt::{absorb_left, absorb_right, add_block, apply_core, dot_step, shape, TensorTrain, TtOperator};

use super::config::AmenConfig;
use super::dense_gmres::dense_gmres;
use super::local::{check_system, enrich, residual_truncation, truncation_threshold, Frame};
use super::report::{Recorder, SolveReport};

/// `ε/(2√(d−1))`, the share of the tolerance given to one site.
fn site_share(epsilon: f64, d: usize) -> f64 {
    epsilon / (2.0 * ((d.max(2) - 1) as f64).sqrt())
}

/// Extra factor on the absolute floor of the simplified variant's local
/// tolerance, so that the local residuals settle below the convergence test
/// instead of at it.
const SOLVE_MARGIN: f64 = 0.5;

/// Local system of site `j`.
struct Site {
    op: LocalOp,
    rhs: Vec<f64>,
    rhs_norm: f64,
}

impl Site {
    fn new(frame: &Frame, j: usize) -> Result<Self> {
        let op = frame.env.local_op(j, &frame.a)?;
        let rhs = frame.env.local_rhs(j, &frame.b)?.into_data();
        let rhs_norm = crate::dense::norm2(&rhs);
        Ok(Site { op, rhs, rhs_norm })
    }

    fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.rhs.clone();
        crate::dense::axpy(-1.0, &self.op.apply(y)?, &mut r);
        Ok(r)
    }

    /// Solves to `abs_tol` from `x0` unless `x0` already meets it. Returns the
    /// solution and its local residual.
    fn solve(&self, x0: &[f64], r0: Vec<f64>, abs_tol: f64, cfg: &AmenConfig) -> Result<(Vec<f64>, Vec<f64>)> {
        if crate::dense::norm2(&r0) <= abs_tol {
            return Ok((x0.to_vec(), r0));
        }
        let mut apply = |v: &[f64]| self.op.apply(v);
        let sol = dense_gmres(&mut apply, &self.rhs, x0, abs_tol, cfg.local_max_iters, cfg.local_restart)?;
        Ok((sol.x, sol.residual))
    }

    /// Truncates the solution `y` of shape `r0·n x r1` at the smallest rank
    /// whose local residual stays below `threshold`.
    fn truncate(
        &self,
        y: &[f64],
        res: f64,
        rows: usize,
        cols: usize,
        max_rank: usize,
        threshold: f64,
    ) -> Result<Trunc> {
        let ym = MatRef::col_major(y, rows, cols);
        let eye = Matrix::identity(cols);
        let yn = crate::dense::norm2(y);
        let guess = (yn > 0.0).then(|| (res, self.rhs_norm / yn));
        let mut eval = |l: &Matrix, r: &Matrix| -> Result<(f64, Vec<f64>)> {
            let yk = contract(l.as_ref(), r.as_ref())?;
            let z = self.residual(yk.as_ref().to_owned().into_col_major().as_slice())?;
            Ok((crate::dense::norm2(&z), z))
        };
        let s = residual_truncation(ym, eye.as_ref(), max_rank, threshold, guess, &mut eval)?;
        Ok(Trunc { left: s.left, right: s.right, residual: s.extra })
    }
}

struct Trunc {
    left: Matrix,
    right: Matrix,
    /// Local residual of `left·right`.
    residual: Vec<f64>,
}

/// Installs the enriched basis `q` as core `j` and `[right; 0]·X_{j+1}` as
/// core `j + 1`.
fn install(frame: &mut Frame, j: usize, q: &Matrix, right: &Matrix) -> Result<()> {
    let (r0, n, r1) = shape(frame.x.core(j));
    let mut padded = Matrix::zeros(q.cols(), r1);
    for c in 0..r1 {
        padded.col_mut(c)[..right.rows()].copy_from_slice(right.col(c));
    }
    let next = absorb_left(&padded, frame.x.core(j + 1))?;
    frame.set_pair(j, DenseTensor::from_matrix(q, &[r0, n, q.cols()])?, next)
}

fn enrichment_room(frame: &Frame, j: usize, max_rank: usize) -> usize {
    let (r0, n, _) = shape(frame.x.core(j));
    let (_, n1, r2) = shape(frame.x.core(j + 1));
    (r0 * n).min(n1 * r2).min(max_rank)
}

/// Simplified AMEn: single-site ALS enriched with the local residual.
///
/// Site `j` is solved with dense GMRES to the absolute tolerance
/// `max(δ_j·ε_inner, ‖b_loc‖ε/(2√(d−1)))`, where `δ_j` is the local
/// residual of the current core. The solution is truncated at the smallest
/// rank keeping the local residual within twice its untruncated value, and
/// `k_enrich` directions of the remaining local residual are appended with
/// a zero-padded neighbour. Once `max δ_j ≤ ε‖B‖/(2√(d−1))` after a
/// half-sweep, the true residual is checked. Site 0 is not re-solved after
/// the first half-sweep, as it was the last site of the previous one.
pub fn tt_amen_simplified(
    a: &TtOperator,
    b: &TensorTrain,
    x0: &TensorTrain,
    cfg: &AmenConfig,
) -> Result<(TensorTrain, SolveReport)> {
    cfg.validate()?;
    let mut rec = Recorder::new();
    let bn = check_system(a, b, x0)?;
    let d = a.d();
    let share = site_share(cfg.epsilon, d);
    let eps_inner = cfg.inner_epsilon();
    let mut frame = Frame::new(a, b, x0)?;
    let mut converged = false;
    let mut res = f64::NAN;
    let mut half = 0;
    while !converged && half < 2 * cfg.max_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..d {
            let site = Site::new(&frame, j)?;
            let xj = frame.x.core(j).data().to_vec();
            let r0 = site.residual(&xj)?;
            let (y, resid) = if half > 0 && j == 0 {
                (xj, r0)
            } else {
                let delta = crate::dense::norm2(&r0);
                max_delta = max_delta.max(delta);
                let tol = (delta * eps_inner).max(SOLVE_MARGIN * site.rhs_norm * share);
                site.solve(&xj, r0, tol, cfg)?
            };
            if j + 1 == d {
                *frame.x.core_mut(j) = DenseTensor::from_vec(frame.x.core(j).dims(), y)?;
                break;
            }
            let (r0d, n, r1) = shape(frame.x.core(j));
            let res = crate::dense::norm2(&resid);
            let threshold = truncation_threshold(res, SOLVE_MARGIN * site.rhs_norm * share);
            let t = site.truncate(&y, res, r0d * n, r1, cfg.max_rank, threshold)?;
            let z = MatRef::col_major(&t.residual, r0d * n, r1);
            let q = enrich(&t.left, z, cfg.k_enrich, enrichment_room(&frame, j, cfg.max_rank))?;
            install(&mut frame, j, &q, &t.right)?;
        }
        frame.mark_swept();
        rec.push(half, max_delta / bn, None, frame.ranks());
        debug!("amen-simplified half-sweep {half}: max delta {:.3e}, ranks {:?}", max_delta / bn, frame.ranks());
        half += 1;
        if max_delta <= share * bn {
            res = frame.residual_norm()?;
            if let Some(t) = rec.last_mut() {
                t.true_residual = Some(res / bn);
            }
            converged = res <= cfg.epsilon * bn;
        }
        if !converged {
            frame.flip();
        }
    }
    if !converged {
        info!("amen-simplified: not converged in {} sweeps", cfg.max_sweeps);
        res = frame.residual_norm()?;
    }
    let x = frame.solution();
    let report = rec.finish("amen-simplified", converged, half, res / bn, false, &x);
    Ok((x, report))
}

/// Residual train `A·X − B` kept core by core: raw cores `[A_j X_j, −B_j]`,
/// triangular factors of its left and right interfaces and the projections
/// of the left interface onto `X`.
///
/// For position `j`, `g_left[j]` satisfies `GᵀG = PᵀP` for the left
/// interface `P` of cores `0..j`, and `g_right[j]` the same for the right
/// interface of cores `j..d`. `psi_left[j]` is `X_{<j}ᵀ·P`.
struct ResidualTrain {
    neg_b: TensorTrain,
    neg_b_other: TensorTrain,
    g_left: Vec<Option<Matrix>>,
    g_right: Vec<Option<Matrix>>,
    psi_left: Vec<Option<Matrix>>,
    psi_right: Vec<Option<Matrix>>,
}

fn one() -> Option<Matrix> {
    Some(Matrix::identity(1))
}

fn need(v: &[Option<Matrix>], j: usize) -> &Matrix {
    v[j].as_ref().expect("residual factor maintained by the sweep")
}

impl ResidualTrain {
    fn new(frame: &mut Frame, b: &TensorTrain) -> Result<Self> {
        let d = frame.d();
        let neg_b = b.clone().scaled(-1.0);
        let mut rt = ResidualTrain {
            neg_b_other: neg_b.reversed(),
            neg_b,
            g_left: vec![None; d + 1],
            g_right: vec![None; d + 1],
            psi_left: vec![None; d + 1],
            psi_right: vec![None; d + 1],
        };
        rt.g_left[0] = one();
        rt.psi_left[0] = one();
        rt.g_right[d] = one();
        rt.psi_right[d] = one();
        // Right factors are left factors of the reversed train.
        frame.flip();
        rt.flip();
        for j in 0..d - 1 {
            rt.update_left(frame, j)?;
        }
        frame.flip();
        rt.flip();
        Ok(rt)
    }

    fn flip(&mut self) {
        std::mem::swap(&mut self.neg_b, &mut self.neg_b_other);
        std::mem::swap(&mut self.g_left, &mut self.g_right);
        std::mem::swap(&mut self.psi_left, &mut self.psi_right);
        self.g_left.reverse();
        self.g_right.reverse();
        self.psi_left.reverse();
        self.psi_right.reverse();
    }

    fn core(&self, frame: &Frame, j: usize, xj: &DenseTensor) -> Result<DenseTensor> {
        residual_core(frame.a.core(j), xj, self.neg_b.core(j), j, frame.d())
    }

    /// Position `j + 1` of the left lists from the current core `j`.
    fn update_left(&mut self, frame: &Frame, j: usize) -> Result<()> {
        let rc = self.core(frame, j, frame.x.core(j))?;
        let t = absorb_left(need(&self.g_left, j), &rc)?;
        self.g_left[j + 1] = Some(householder_r(t.matrix(2)));
        self.psi_left[j + 1] = Some(dot_step(need(&self.psi_left, j), frame.x.core(j), &rc)?);
        Ok(())
    }

    /// `‖A·X − B‖` with core `j` of `X` replaced by `xj`.
    fn norm_with(&self, frame: &Frame, j: usize, xj: &DenseTensor) -> Result<(f64, DenseTensor)> {
        let rc = self.core(frame, j, xj)?;
        let gr = need(&self.g_right, j + 1).t().to_owned();
        let c = absorb_right(&absorb_left(need(&self.g_left, j), &rc)?, &gr)?;
        Ok((c.norm(), rc))
    }

    /// Left interface of `X` times the residual core `rc` times the right
    /// residual factor: the residual seen from site `j`.
    fn projected(&self, j: usize, rc: &DenseTensor) -> Result<DenseTensor> {
        let gr = need(&self.g_right, j + 1).t().to_owned();
        absorb_right(&absorb_left(need(&self.psi_left, j), rc)?, &gr)
    }
}

/// Core `j` of `A·X + N` in block form for the raw sum of two trains.
fn residual_core(aj: &DenseTensor, xj: &DenseTensor, nj: &DenseTensor, j: usize, d: usize) -> Result<DenseTensor> {
    let ax = apply_core(aj, xj)?;
    let (p0, n, p1) = shape(&ax);
    let (q0, _, q1) = shape(nj);
    let (first, last) = (j == 0, j + 1 == d);
    let r0 = if first { 1 } else { p0 + q0 };
    let r1 = if last { 1 } else { p1 + q1 };
    let mut z = DenseTensor::zeros(&[r0, n, r1]);
    add_block(&mut z, &ax, 0, 0, 1.0);
    add_block(&mut z, nj, if first { 0 } else { p0 }, if last { 0 } else { p1 }, 1.0);
    Ok(z)
}

/// AMEn with a maintained residual train.
///
/// Every site is solved accurately (`‖b_loc‖ε/(2√(d−1))`). The residual
/// norm is evaluated after each local solve from the stored interface
/// factors, and the iteration stops once it drops below `ε‖B‖` (confirmed
/// by an independent residual computation). Enrichment directions are the
/// leading left singular vectors of the residual projected onto the left
/// interface of `X`, orthogonalized against the new core.
pub fn tt_amen_full(
    a: &TtOperator,
    b: &TensorTrain,
    x0: &TensorTrain,
    cfg: &AmenConfig,
) -> Result<(TensorTrain, SolveReport)> {
    cfg.validate()?;
    let mut rec = Recorder::new();
    let bn = check_system(a, b, x0)?;
    let d = a.d();
    if d == 1 {
        return single_core(a, b, x0, cfg, bn, "amen", rec);
    }
    let share = site_share(cfg.epsilon, d);
    let mut frame = Frame::new(a, b, x0)?;
    let mut rt = ResidualTrain::new(&mut frame, b)?;
    let mut converged = false;
    let mut res = f64::NAN;
    let mut half = 0;
    let mut estimate = f64::NAN;
    'sweeps: while half < 2 * cfg.max_sweeps {
        for j in 0..d - 1 {
            let site = Site::new(&frame, j)?;
            let xj = frame.x.core(j).data().to_vec();
            let r0 = site.residual(&xj)?;
            let (y, resid) = site.solve(&xj, r0, site.rhs_norm * share, cfg)?;
            let (r0d, n, r1) = shape(frame.x.core(j));
            let local = crate::dense::norm2(&resid);
            let threshold = truncation_threshold(local, site.rhs_norm * share);
            let t = site.truncate(&y, local, r0d * n, r1, cfg.max_rank, threshold)?;
            let solved = DenseTensor::from_matrix(&contract(t.left.as_ref(), t.right.as_ref())?, &[r0d, n, r1])?;
            let (rnorm, rc) = rt.norm_with(&frame, j, &solved)?;
            estimate = rnorm / bn;
            if rnorm <= cfg.epsilon * bn {
                let mut trial = frame.x.clone();
                *trial.core_mut(j) = solved.clone();
                let true_res = super::ops::residual_norm(&frame.a, &frame.b, &trial)?;
                if true_res <= cfg.epsilon * bn {
                    frame.x = trial;
                    res = true_res;
                    converged = true;
                    rec.push(half, estimate, Some(res / bn), frame.ranks());
                    half += 1;
                    break 'sweeps;
                }
            }
            let z = rt.projected(j, &rc)?;
            let q = enrich(&t.left, z.matrix(2), cfg.k_enrich, enrichment_room(&frame, j, cfg.max_rank))?;
            install(&mut frame, j, &q, &t.right)?;
            rt.update_left(&frame, j)?;
        }
        frame.mark_swept();
        rec.push(half, estimate, None, frame.ranks());
        debug!("amen half-sweep {half}: residual estimate {estimate:.3e}, ranks {:?}", frame.ranks());
        half += 1;
        frame.flip();
        rt.flip();
    }
    if !converged {
        info!("amen: not converged in {} sweeps", cfg.max_sweeps);
        res = frame.residual_norm()?;
    }
    let x = frame.solution();
    let report = rec.finish("amen", converged, half, res / bn, false, &x);
    Ok((x, report))
}

/// `d = 1`: one dense solve.
fn single_core(
    a: &TtOperator,
    b: &TensorTrain,
    x0: &TensorTrain,
    cfg: &AmenConfig,
    bn: f64,
    method: &str,
    mut rec: Recorder,
) -> Result<(TensorTrain, SolveReport)> {
    let mut frame = Frame::new(a, b, x0)?;
    let site = Site::new(&frame, 0)?;
    let xj = frame.x.core(0).data().to_vec();
    let r0 = site.residual(&xj)?;
    let (y, _) = site.solve(&xj, r0, 0.5 * cfg.epsilon * bn, cfg)?;
    *frame.x.core_mut(0) = DenseTensor::from_vec(frame.x.core(0).dims(), y)?;
    let res = frame.residual_norm()?;
    rec.push(0, res / bn, Some(res / bn), frame.ranks());
    let x = frame.solution();
    let report = rec.finish(method, res <= cfg.epsilon * bn, 1, res / bn, false, &x);
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{conv_diff_operator, rhs_ones};
    use crate::solvers::relative_residual;
    use crate::tt::norm;

    #[test]
    fn identity_converges_within_one_sweep() {
        let dims = [4, 3, 5];
        let a = TtOperator::identity(&dims).unwrap();
        let (b, _) = TensorTrain::random(&dims, &[1, 2, 3, 1], 1).unwrap();
        let (x0, _) = TensorTrain::random(&dims, &[1, 2, 2, 1], 2).unwrap();
        for f in [tt_amen_full, tt_amen_simplified] {
            let (x, rep) = f(&a, &b, &x0, &AmenConfig::default()).unwrap();
            assert!(rep.converged, "{rep:?}");
            assert!(rep.iterations <= 4, "{} {}", rep.method, rep.iterations);
            assert!(relative_residual(&a, &b, &x).unwrap() <= 1e-8);
        }
        // Starting from the solution every local residual vanishes.
        let (_, rep) = tt_amen_simplified(&a, &b, &b, &AmenConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert!(rep.trace[0].residual_estimate < 1e-12);
    }

    #[test]
    fn residual_factors_give_the_residual_norm() {
        let dims = [3, 4, 3];
        let a = conv_diff_operator(&dims, 5.0).unwrap();
        let b = rhs_ones(&dims).unwrap();
        let (x0, _) = TensorTrain::random(&dims, &[1, 2, 2, 1], 4).unwrap();
        let mut frame = Frame::new(&a, &b, &x0).unwrap();
        let rt = ResidualTrain::new(&mut frame, &b).unwrap();
        let (r, _) = rt.norm_with(&frame, 0, &frame.x.core(0).clone()).unwrap();
        let expect = super::super::ops::residual_norm(&a, &b, &frame.x).unwrap();
        assert!((r - expect).abs() <= 1e-10 * expect, "{r} vs {expect}");
        assert!(norm(&b) > 0.0);
    }

    #[test]
    fn conv_diff_small() {
        let dims = [5, 5, 5];
        let a = conv_diff_operator(&dims, 10.0).unwrap();
        let b = rhs_ones(&dims).unwrap();
        let x0 = TensorTrain::constant(&dims, 0.0).unwrap();
        for f in [tt_amen_full, tt_amen_simplified] {
            let (x, rep) = f(&a, &b, &x0, &AmenConfig::default()).unwrap();
            assert!(rep.converged, "{rep:?}");
            assert!(relative_residual(&a, &b, &x).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn single_core_system() {
        let a = conv_diff_operator(&[6], 1.0).unwrap();
        let b = rhs_ones(&[6]).unwrap();
        let (x, rep) = tt_amen_full(&a, &b, &b, &AmenConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(relative_residual(&a, &b, &x).unwrap() <= 1e-8);
    }
}
