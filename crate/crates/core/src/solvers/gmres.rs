use log::{debug, info};

use crate::dense::flops;
use crate::error::{violation, Result};
use crate::tt::{axpby_raw, dot, norm, TensorTrain, TtOperator};

use super::config::{GmresConfig, OrthoScheme};
use super::map::TtLinearMap;
use super::ops::{deflated_norm, residual_norm, Ops, Oriented};
use super::precond::{PreconditionedOp, RankOnePrecond};
use super::report::{Recorder, SolveReport};
use super::simgs::{simgs_with, BREAKDOWN};

/// Share of the target reserved for truncating the residual of a restart.
const RESTART_RHS_SHARE: f64 = 0.1;

/// `‖B − A·X‖/‖B‖` recomputed in TT arithmetic with exact orthogonalization.
pub fn relative_residual<M: TtLinearMap + ?Sized>(a: &M, b: &TensorTrain, x: &TensorTrain) -> Result<f64> {
    Ok(residual_norm(a, b, x)? / norm(b))
}

/// Inexact TT-GMRES for `A·X = B`, optionally with a rank-one two-sided
/// preconditioner (then `P_left A P_right Y = P_left B` is solved and
/// `X = P_right Y` returned).
///
/// Operator applications, Gram-Schmidt steps and the solution assembly are
/// truncated with the graded relative tolerances of the inexact Arnoldi
/// process, `δ_i = 0.5ε/(cm)·γ₀/γ_{i−1}`. Convergence claimed by the Arnoldi
/// estimate is always confirmed with the true residual; if that check fails
/// the iteration restarts from the current solution.
pub fn tt_gmres(
    a: &TtOperator,
    b: &TensorTrain,
    cfg: &GmresConfig,
    precond: Option<&RankOnePrecond>,
) -> Result<(TensorTrain, SolveReport)> {
    let Some(p) = precond else {
        return tt_gmres_map(a, b, None, cfg);
    };
    cfg.validate()?;
    let mut rec = Recorder::new();
    let bn = checked_rhs_norm(a, b)?;
    let op = PreconditionedOp::new(a, p)?;
    let pb = p.apply_left(b)?;
    let pbn = norm(&pb);
    let check = |y: &TensorTrain| -> Result<f64> { Ok(residual_norm(a, b, &p.apply_right(y)?)? / bn) };
    let out = gmres_core(&op, &pb, None, cfg, cfg.epsilon * pbn, &check, cfg.epsilon, pbn, &mut rec)?;
    let x = p.apply_right(&out.x)?;
    let report = rec.finish("gmres-precond", out.converged, out.iterations, out.residual, out.breakdown, &x);
    Ok((x, report))
}

/// TT-GMRES on any [`TtLinearMap`], optionally from an initial guess.
pub fn tt_gmres_map<M: TtLinearMap + ?Sized>(
    a: &M,
    b: &TensorTrain,
    x0: Option<&TensorTrain>,
    cfg: &GmresConfig,
) -> Result<(TensorTrain, SolveReport)> {
    cfg.validate()?;
    let mut rec = Recorder::new();
    let bn = checked_rhs_norm(a, b)?;
    let check = |x: &TensorTrain| -> Result<f64> { Ok(residual_norm(a, b, x)? / bn) };
    let out = gmres_core(a, b, x0, cfg, cfg.epsilon * bn, &check, cfg.epsilon, bn, &mut rec)?;
    let method = if cfg.ortho == OrthoScheme::Simgs { "gmres-simgs" } else { "gmres" };
    let report = rec.finish(method, out.converged, out.iterations, out.residual, out.breakdown, &out.x);
    Ok((out.x, report))
}

fn checked_rhs_norm<M: TtLinearMap + ?Sized>(a: &M, b: &TensorTrain) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(crate::error::mismatch(format!("operator {:?} vs right-hand side {:?}", a.dims(), b.dims())));
    }
    let bn = norm(b);
    if !(bn > 0.0) || !bn.is_finite() {
        return Err(violation("right-hand side must be nonzero and finite"));
    }
    Ok(bn)
}

pub(crate) struct GmresOutcome {
    pub x: TensorTrain,
    pub converged: bool,
    pub iterations: usize,
    pub breakdown: bool,
    /// Last value returned by the residual check.
    pub residual: f64,
}

/// Restarted inexact GMRES.
///
/// The Arnoldi estimate aims at `‖rhs − map·x‖ ≤ target`. Each claimed
/// convergence is confirmed with `check(x) ≤ check_target`; on failure the
/// target is tightened and a new cycle starts from `x`. Trace estimates are
/// divided by `scale`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gmres_core<M: TtLinearMap + ?Sized>(
    map: &M,
    rhs: &TensorTrain,
    x0: Option<&TensorTrain>,
    cfg: &GmresConfig,
    target: f64,
    check: &dyn Fn(&TensorTrain) -> Result<f64>,
    check_target: f64,
    scale: f64,
    rec: &mut Recorder,
) -> Result<GmresOutcome> {
    let ops = Ops::new(cfg.backend, cfg.max_rank);
    let symmetric = cfg.symmetric.unwrap_or_else(|| map.is_symmetric());
    let mut target = target;
    let mut x: Option<TensorTrain> = x0.cloned();
    let mut used = 0;
    let mut breakdown = false;
    let mut idle_checks = 0;
    let mut residual = f64::INFINITY;
    loop {
        let rhs_c = match &x {
            None => rhs.clone(),
            Some(x) => ops.trunc_abs(&axpby_raw(1.0, rhs, -1.0, &map.apply(x)?)?, RESTART_RHS_SHARE * target)?,
        };
        let gamma0 = norm(&rhs_c);
        if x.is_none() && !(gamma0 > 0.0) {
            return Err(violation("right-hand side must be nonzero"));
        }
        let reserve = if x.is_some() { 1.0 - RESTART_RHS_SHARE } else { 1.0 };
        if let Some(xc) = &x {
            if gamma0 <= reserve * target {
                residual = check(xc)?;
                if residual <= check_target {
                    return Ok(GmresOutcome { x: x.unwrap(), converged: true, iterations: used, breakdown, residual });
                }
                idle_checks += 1;
                if idle_checks > 3 {
                    break;
                }
                target *= 0.5 * check_target / residual;
                continue;
            }
        }
        let cycle_len = if cfg.restart > 0 { cfg.restart } else { cfg.max_iters };
        let m = cycle_len.min(cfg.max_iters - used);
        if m == 0 {
            break;
        }
        let eps_c = (reserve * target / gamma0).min(0.5);
        let out = arnoldi_cycle(map, rhs_c, gamma0, eps_c, m, cfg, &ops, symmetric, rec, used, scale)?;
        used += out.iterations;
        breakdown |= out.breakdown;
        let xn = match x.take() {
            None => out.dx,
            // Relative to the correction: a truncation error e adds at most
            // ‖A‖‖e‖ ≲ c·‖e‖/‖dx‖·γ₀ to the residual.
            Some(xp) => {
                let tol = 0.5 * eps_c / cfg.cond_estimate * norm(&out.dx);
                ops.trunc_abs(&axpby_raw(1.0, &xp, 1.0, &out.dx)?, tol)?
            }
        };
        residual = check(&xn)?;
        if let Some(last) = rec.last_mut() {
            last.true_residual = Some(residual);
        }
        debug!("gmres: {used} iterations, true residual {residual:.3e}");
        if residual <= check_target {
            return Ok(GmresOutcome { x: xn, converged: true, iterations: used, breakdown, residual });
        }
        if out.reached {
            target *= 0.5 * check_target / residual;
        }
        x = Some(xn);
        if used >= cfg.max_iters || out.exhausted {
            break;
        }
        info!("gmres: true residual {residual:.3e} above target, restarting");
    }
    let x = x.expect("at least one cycle ran");
    Ok(GmresOutcome { x, converged: false, iterations: used, breakdown, residual })
}

struct CycleOutcome {
    dx: TensorTrain,
    iterations: usize,
    reached: bool,
    breakdown: bool,
    exhausted: bool,
}

#[allow(clippy::too_many_arguments)]
fn arnoldi_cycle<M: TtLinearMap + ?Sized>(
    map: &M,
    rhs: TensorTrain,
    gamma0: f64,
    eps: f64,
    m: usize,
    cfg: &GmresConfig,
    ops: &Ops,
    symmetric: bool,
    rec: &mut Recorder,
    offset: usize,
    scale: f64,
) -> Result<CycleOutcome> {
    let c = cfg.cond_estimate;
    let mut basis = vec![Oriented::new(rhs.scaled(1.0 / gamma0))];
    // Columns of the Hessenberg matrix after the Givens rotations, i.e. of R.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rots: Vec<(f64, f64)> = Vec::with_capacity(m);
    let mut g = vec![gamma0];
    let mut gamma_prev = gamma0;
    let mut reached = false;
    let mut broke = false;
    let mut exhausted = false;
    let mut steps = 0;
    for i in 1..=m {
        let delta = (0.5 * eps / (c * m as f64) * gamma0 / gamma_prev).min(0.5);
        let aw = map.apply(basis[i - 1].get())?;
        let candidates = if symmetric { i.saturating_sub(2)..i } else { 0..i };
        let (h, w, w0) = match cfg.ortho {
            OrthoScheme::Simgs => simgs_with(&basis, &aw, delta, candidates, ops)?,
            OrthoScheme::Mgs => mgs(&basis, &aw, delta, candidates, ops, false)?,
            OrthoScheme::Naive => mgs(&basis, &aw, delta, candidates, ops, true)?,
        };
        let wn = norm(&w);
        broke = wn <= BREAKDOWN * w0;
        let mut col = h;
        col.push(if broke { 0.0 } else { wn });
        for (k, &(cs, sn)) in rots.iter().enumerate() {
            let (a, b) = (col[k], col[k + 1]);
            col[k] = cs * a + sn * b;
            col[k + 1] = -sn * a + cs * b;
        }
        let (a, b) = (col[i - 1], col[i]);
        let r = a.hypot(b);
        let (cs, sn) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
        col[i - 1] = r;
        col[i] = 0.0;
        rots.push((cs, sn));
        g.push(-sn * g[i - 1]);
        g[i - 1] *= cs;
        cols.push(col);
        let gamma = g[i].abs();
        steps = i;
        let ranks = if broke { basis[i - 1].get().ranks() } else { w.ranks() };
        rec.push(offset + i, gamma / scale, None, ranks);
        if let Some(last) = rec.last_mut() {
            last.delta = Some(delta);
        }
        if broke {
            debug!("gmres: happy breakdown at step {i}");
            reached = true;
            break;
        }
        let v = w.scaled(1.0 / wn);
        if cfg.diagnostics {
            let overlap = flops::uncounted(|| -> Result<f64> {
                let mut worst = 0.0f64;
                for b in &basis {
                    worst = worst.max(dot(b.get(), &v)?.abs());
                }
                Ok(worst)
            })?;
            if let Some(last) = rec.last_mut() {
                last.max_overlap = Some(overlap);
            }
        }
        if gamma / gamma0 <= 0.5 * eps {
            reached = true;
            break;
        }
        if cfg.max_flops.is_some_and(|f| rec.flops().total() >= f) {
            debug!("gmres: flop budget spent after step {i}");
            exhausted = true;
            break;
        }
        gamma_prev = gamma;
        basis.push(Oriented::new(v));
    }
    let y = back_substitute(&cols, &g[..steps]);
    let mut dx = basis[0].get().clone().scaled(y[0]);
    for (j, &yj) in y.iter().enumerate().skip(1) {
        dx = ops.axpby_rel(1.0, &dx, yj, basis[j].get(), 0.5 * eps / (c * steps as f64), None)?;
    }
    Ok(CycleOutcome { dx, iterations: steps, reached, breakdown: broke, exhausted })
}

/// Modified Gram-Schmidt with truncation after every subtraction; `naive`
/// truncates everything at the full `δ`.
fn mgs(
    basis: &[Oriented],
    aw: &TensorTrain,
    delta: f64,
    candidates: std::ops::Range<usize>,
    ops: &Ops,
    naive: bool,
) -> Result<(Vec<f64>, TensorTrain, f64)> {
    let i = basis.len();
    let step = if naive { delta } else { 0.5 * delta / (i + 1) as f64 };
    let mut w = ops.trunc_rel(aw, step)?;
    let w0 = norm(&w);
    let mut wn = w0;
    let mut h = vec![0.0; i];
    for j in candidates {
        let v = basis[j].matching(&w)?;
        let hj = dot(v, &w)?;
        w = ops.axpby_rel(1.0, &w, -hj, v, step, deflated_norm(wn, hj))?;
        wn = norm(&w);
        h[j] = hj;
    }
    let w = ops.trunc_rel(&w, if naive { delta } else { 0.5 * delta })?;
    Ok((h, w, w0))
}

/// Solves `R y = g` for the upper triangular `R` stored by columns.
fn back_substitute(cols: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut y = g.to_vec();
    for k in (0..n).rev() {
        let mut s = y[k];
        for (l, yl) in y.iter().enumerate().take(n).skip(k + 1) {
            s -= cols[l][k] * yl;
        }
        y[k] = if cols[k][k] != 0.0 { s / cols[k][k] } else { 0.0 };
    }
    y
}
