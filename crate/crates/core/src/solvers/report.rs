use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::flops::{self, FlopTally};
use crate::fast::fallback_count;
use crate::tt::TensorTrain;

/// Version of the serialized report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One Arnoldi step or half-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    /// `γ_i/‖B‖` for GMRES, `max_j δ_j/‖B‖` for the alternating solvers.
    pub residual_estimate: f64,
    /// Relative residual recomputed in TT arithmetic, when it was computed.
    pub true_residual: Option<f64>,
    /// Ranks of the newest Krylov vector (GMRES) or of the iterate.
    pub ranks: Vec<usize>,
    pub max_rank: usize,
    pub cumulative_flops: u64,
    pub wall_seconds: f64,
    /// Truncation tolerance `δ_i` of the Arnoldi step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `max_j |⟨V_j, V_{i+1}⟩|`, recorded with diagnostics enabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub method: String,
    pub converged: bool,
    /// Arnoldi steps (GMRES) or half-sweeps (MALS, AMEn).
    pub iterations: usize,
    /// `‖B − AX‖/‖B‖` of the returned solution, recomputed in TT arithmetic.
    pub relative_residual: f64,
    /// Set when the Krylov space became invariant.
    pub breakdown: bool,
    pub solution_ranks: Vec<usize>,
    pub flops: FlopTally,
    pub total_flops: u64,
    pub fast_fallbacks: u64,
    pub wall_seconds: f64,
    pub trace: Vec<TraceRecord>,
}

/// Collects trace records with flop and time offsets from its creation.
pub(crate) struct Recorder {
    t0: Instant,
    flops0: FlopTally,
    fallbacks0: u64,
    pub(crate) trace: Vec<TraceRecord>,
}

impl Recorder {
    pub(crate) fn new() -> Self {
        Recorder { t0: Instant::now(), flops0: flops::snapshot(), fallbacks0: fallback_count(), trace: Vec::new() }
    }

    pub(crate) fn flops(&self) -> FlopTally {
        flops::snapshot() - self.flops0
    }

    pub(crate) fn push(&mut self, index: usize, estimate: f64, true_residual: Option<f64>, ranks: Vec<usize>) {
        let max_rank = ranks.iter().copied().max().unwrap_or(1);
        self.trace.push(TraceRecord {
            index,
            residual_estimate: estimate,
            true_residual,
            ranks,
            max_rank,
            cumulative_flops: self.flops().total(),
            wall_seconds: self.t0.elapsed().as_secs_f64(),
            delta: None,
            max_overlap: None,
        });
    }

    pub(crate) fn last_mut(&mut self) -> Option<&mut TraceRecord> {
        self.trace.last_mut()
    }

    pub(crate) fn finish(
        self,
        method: &str,
        converged: bool,
        iterations: usize,
        relative_residual: f64,
        breakdown: bool,
        x: &TensorTrain,
    ) -> SolveReport {
        let flops = self.flops();
        SolveReport {
            schema_version: REPORT_SCHEMA_VERSION,
            method: method.to_string(),
            converged,
            iterations,
            relative_residual,
            breakdown,
            solution_ranks: x.ranks(),
            flops,
            total_flops: flops.total(),
            fast_fallbacks: fallback_count() - self.fallbacks0,
            wall_seconds: self.t0.elapsed().as_secs_f64(),
            trace: self.trace,
        }
    }
}
