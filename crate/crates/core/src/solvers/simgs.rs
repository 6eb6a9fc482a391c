use std::ops::Range;

use crate::error::{violation, Result};
use crate::tt::{dot, norm, TensorTrain};

use super::config::Backend;
use super::ops::{deflated_norm, Ops, Oriented};

/// Outer passes of SIMGS.
const MAX_PASSES: usize = 4;

/// Relative norm below which the orthogonalized direction counts as zero.
pub(crate) const BREAKDOWN: f64 = 1e-14;

/// Result of [`simgs`].
#[derive(Debug, Clone)]
pub enum SimgsOutcome {
    /// `W ≈ Σ h_j V_j + h_{i+1}·v` with a new unit vector `v`.
    Direction { h: Vec<f64>, h_next: f64, v: TensorTrain },
    /// `W` lies in the span of the basis (happy breakdown).
    Breakdown { h: Vec<f64> },
}

/// Selective iterated modified Gram-Schmidt.
///
/// Up to four passes compute all `g_j = ⟨V_j, W⟩/‖W‖` and subtract, in order
/// of decreasing `|g_j|` (lowest index on ties), only the directions with
/// `|g_j| > δ`. Every subtraction is truncated at `0.5δ/(2i+1)` relative,
/// the result once more at `0.5δ`. Uses the standard truncation backend.
pub fn simgs(basis: &[TensorTrain], w: &TensorTrain, delta: f64) -> Result<SimgsOutcome> {
    if !(delta > 0.0) {
        return Err(violation("SIMGS needs δ > 0"));
    }
    let basis: Vec<Oriented> = basis.iter().cloned().map(Oriented::new).collect();
    let ops = Ops::new(Backend::Standard, usize::MAX);
    let (h, w, w0) = simgs_with(&basis, w, delta, 0..basis.len(), &ops)?;
    let h_next = norm(&w);
    if h_next <= BREAKDOWN * w0 {
        return Ok(SimgsOutcome::Breakdown { h });
    }
    Ok(SimgsOutcome::Direction { h, h_next, v: w.scaled(1.0 / h_next) })
}

/// Core of [`simgs`] on the candidate range of the basis. Returns the
/// coefficients, the unnormalized new direction and `‖W‖` after the first
/// truncation.
pub(crate) fn simgs_with(
    basis: &[Oriented],
    w: &TensorTrain,
    delta: f64,
    candidates: Range<usize>,
    ops: &Ops,
) -> Result<(Vec<f64>, TensorTrain, f64)> {
    let i = basis.len();
    let step = 0.5 * delta / (2 * i + 1) as f64;
    let mut w = ops.trunc_rel(w, step)?;
    let w0 = norm(&w);
    let mut h = vec![0.0; i];
    let mut wn = w0;
    for _ in 0..MAX_PASSES {
        if wn <= BREAKDOWN * w0 {
            break;
        }
        let mut g = vec![0.0; i];
        for j in candidates.clone() {
            g[j] = dot(basis[j].get(), &w)? / wn;
        }
        if g.iter().all(|x| x.abs() <= delta) {
            break;
        }
        let mut fresh = true;
        loop {
            let mut best = None;
            for j in candidates.clone() {
                if g[j].abs() > delta && best.is_none_or(|b: usize| g[j].abs() > g[b].abs()) {
                    best = Some(j);
                }
            }
            let Some(j) = best else { break };
            let v = basis[j].matching(&w)?;
            let beta = if fresh { g[j] * wn } else { dot(v, &w)? };
            fresh = false;
            w = ops.axpby_rel(1.0, &w, -beta, v, step, deflated_norm(wn, beta))?;
            wn = norm(&w);
            h[j] += beta;
            g[j] = 0.0;
        }
    }
    let w = ops.trunc_rel(&w, 0.5 * delta)?;
    Ok((h, w, w0))
}
