use log::{debug, info};

use crate::dense::{tensordot, DenseTensor, Matrix};
use crate::error::{violation, Result};
use crate::tt::{norm, TensorTrain, TtOperator};

use super::config::MalsConfig;
use super::gmres::gmres_core;
use super::local::{check_system, residual_truncation, truncation_threshold, Frame};
use super::ops::residual_norm;
use super::report::{Recorder, SolveReport};

/// Modified alternating linear scheme: optimizes two neighbouring cores at a
/// time.
///
/// Each pair problem `VᵀAV·Y = VᵀB` is a two-core TT system solved by
/// TT-GMRES (MINRES for symmetric `A`) from the current pair as initial guess,
/// with relative tolerance `max(ε_inner, ε‖B‖/‖AX − B‖)`. The solution is
/// split back at the smallest rank whose local residual stays within twice
/// that of the untruncated solution (and at least `ε‖b_loc‖/(2√(d−1))`). The
/// true residual is checked after every half-sweep.
pub fn tt_mals(
    a: &TtOperator,
    b: &TensorTrain,
    x0: &TensorTrain,
    cfg: &MalsConfig,
) -> Result<(TensorTrain, SolveReport)> {
    cfg.validate()?;
    let mut rec = Recorder::new();
    let bn = check_system(a, b, x0)?;
    let d = a.d();
    if d < 2 {
        return Err(violation("MALS needs at least two cores"));
    }
    let mut frame = Frame::new(a, b, x0)?;
    let mut res = frame.residual_norm()?;
    let split_floor = cfg.epsilon / (2.0 * ((d - 1) as f64).sqrt());
    let mut converged = res <= cfg.epsilon * bn;
    let mut half = 0;
    while !converged && half < 2 * cfg.max_sweeps {
        let eps_inner = cfg.inner_epsilon().max(cfg.epsilon * bn / res).min(0.5);
        let start = if half == 0 { 0 } else { 1 };
        if start == 1 {
            frame.left_orthogonalize(0)?;
        }
        let mut estimate = 0.0f64;
        for j in start..d - 1 {
            let local = solve_pair(&mut frame, j, cfg, eps_inner, split_floor)?;
            estimate = estimate.max(local);
        }
        frame.mark_swept();
        res = frame.residual_norm()?;
        rec.push(half, estimate / bn, Some(res / bn), frame.ranks());
        debug!("mals half-sweep {half}: residual {:.3e}, ranks {:?}", res / bn, frame.ranks());
        converged = res <= cfg.epsilon * bn;
        half += 1;
        if !converged {
            frame.flip();
        }
    }
    if !converged {
        info!("mals: not converged in {} sweeps", cfg.max_sweeps);
    }
    let x = frame.solution();
    let report = rec.finish("mals", converged, half, res / bn, false, &x);
    Ok((x, report))
}

/// Solves the pair `(j, j + 1)` and splits the result into the frame.
/// Returns the local residual of the initial pair.
fn solve_pair(frame: &mut Frame, j: usize, cfg: &MalsConfig, eps_inner: f64, split_floor: f64) -> Result<f64> {
    let (op, rhs, y0) = pair_system(frame, j)?;
    let rn = norm(&rhs);
    let r0 = residual_norm(&op, &rhs, &y0)?;
    let floor = split_floor * rn;
    let (y, res_y) = if r0 <= floor || rn == 0.0 {
        (y0, r0)
    } else {
        let target = eps_inner * r0;
        let mut inner = cfg.inner.clone();
        inner.epsilon = eps_inner;
        inner.max_rank = inner.max_rank.min(cfg.max_rank);
        let check = |y: &TensorTrain| -> Result<f64> { Ok(residual_norm(&op, &rhs, y)? / rn) };
        let mut scratch = Recorder::new();
        let out = gmres_core(&op, &rhs, Some(&y0), &inner, target, &check, target / rn, rn, &mut scratch)?;
        let res = if out.residual.is_finite() { out.residual * rn } else { residual_norm(&op, &rhs, &out.x)? };
        // Truncation inside the inner solver can leave it worse than its start.
        if res < r0 {
            (out.x, res)
        } else {
            (y0, r0)
        }
    };
    let (m0, m1) = (y.core(0).dims()[1], y.core(1).dims()[1]);
    let threshold = truncation_threshold(res_y, floor);
    let mut eval = |l: &Matrix, r: &Matrix| -> Result<(f64, ())> {
        let yk = pair_train(l, r, m0, m1)?;
        Ok((residual_norm(&op, &rhs, &yk)?, ()))
    };
    let split = residual_truncation(
        y.core(0).matrix(2),
        y.core(1).matrix(1),
        cfg.max_rank,
        threshold,
        Some((res_y, rn / norm(&y))),
        &mut eval,
    )?;
    let (r0x, n0, _) = crate::tt::shape(frame.x.core(j));
    let (_, n1, r2x) = crate::tt::shape(frame.x.core(j + 1));
    let k = split.left.cols();
    let left = DenseTensor::from_matrix(&split.left, &[r0x, n0, k])?;
    let right = DenseTensor::from_matrix(&split.right, &[k, n1, r2x])?;
    frame.set_pair(j, left, right)?;
    Ok(r0)
}

fn pair_train(l: &Matrix, r: &Matrix, m0: usize, m1: usize) -> Result<TensorTrain> {
    let k = l.cols();
    TensorTrain::from_cores(vec![DenseTensor::from_matrix(l, &[1, m0, k])?, DenseTensor::from_matrix(r, &[k, m1, 1])?])
}

/// Two-core operator, right-hand side and initial guess of the pair
/// `(j, j + 1)`. The first mode fuses `(a, i)`, the second `(i, b)`.
fn pair_system(frame: &Frame, j: usize) -> Result<(TtOperator, TensorTrain, TensorTrain)> {
    let (a, b, x, env) = (&frame.a, &frame.b, &frame.x, &frame.env);
    let (l, r) = (env.left(j)?, env.right(j + 2)?);
    let (r0, n0, n1, r2) = (l.dims()[0], a.core(j).dims()[1], a.core(j + 1).dims()[1], r.dims()[0]);
    let ra = a.core(j).dims()[3];
    // [a', a, i', i, β] -> [a', i', a, i, β]
    let m1 = tensordot(l, &[1], a.core(j), &[0])?.permute(&[0, 2, 1, 3, 4]).reshape(&[1, r0 * n0, r0 * n0, ra])?;
    // [β, i', i, b', b] -> [β, i', b', i, b]
    let m2 = tensordot(a.core(j + 1), &[3], r, &[1])?.permute(&[0, 1, 3, 2, 4]).reshape(&[ra, n1 * r2, n1 * r2, 1])?;
    let mut op = TtOperator::from_cores(vec![m1, m2])?;
    op.set_symmetric(a.is_symmetric());
    let rb = b.core(j).dims()[2];
    let c0 = tensordot(env.left_rhs(j)?, &[1], b.core(j), &[0])?.reshape(&[1, r0 * n0, rb])?;
    let c1 = tensordot(b.core(j + 1), &[2], env.right_rhs(j + 2)?, &[1])?.reshape(&[rb, n1 * r2, 1])?;
    let rhs = TensorTrain::from_cores(vec![c0, c1])?;
    let r1 = x.core(j).dims()[2];
    let y0 = TensorTrain::from_cores(vec![
        x.core(j).clone().reshape(&[1, r0 * n0, r1])?,
        x.core(j + 1).clone().reshape(&[r1, n1 * r2, 1])?,
    ])?;
    Ok((op, rhs, y0))
}
