use serde::{Deserialize, Serialize};

use crate::error::{violation, Result};

/// Orthogonalization used in the Arnoldi process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OrthoScheme {
    /// Modified Gram-Schmidt with the graded truncation tolerances.
    #[default]
    Mgs,
    /// Selective iterated modified Gram-Schmidt.
    Simgs,
    /// MGS with every truncation at the full `δ_i`. Only useful to show the
    /// rank growth this causes.
    Naive,
}

/// Which truncation and addition kernels a solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Standard,
    #[default]
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmresConfig {
    /// Target relative residual `‖B − AX‖ ≤ ε‖B‖`.
    pub epsilon: f64,
    /// Maximum number of Arnoldi steps in total.
    pub max_iters: usize,
    /// Estimate `c` of the condition number used to grade truncations.
    pub cond_estimate: f64,
    pub ortho: OrthoScheme,
    /// Skip `h_{i,j}` for `j < i − 1`. `None` follows the operator's flag.
    pub symmetric: Option<bool>,
    /// Arnoldi steps per cycle; 0 disables restarts.
    pub restart: usize,
    pub backend: Backend,
    /// Rank cap applied by every truncation.
    pub max_rank: usize,
    /// Record `max_j |⟨V_j, V_{i+1}⟩|` in the trace (uncounted extra work).
    pub diagnostics: bool,
    /// Stop unconverged once this many flops have been spent.
    pub max_flops: Option<u64>,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            epsilon: 1e-8,
            max_iters: 100,
            cond_estimate: 1e3,
            ortho: OrthoScheme::Mgs,
            symmetric: None,
            restart: 0,
            backend: Backend::Fast,
            max_rank: usize::MAX,
            diagnostics: false,
            max_flops: None,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(violation(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(violation("max_iters must be at least 1"));
        }
        if !(self.cond_estimate >= 1.0) {
            return Err(violation(format!("cond_estimate must be ≥ 1, got {}", self.cond_estimate)));
        }
        if self.max_rank == 0 {
            return Err(violation("max_rank must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MalsConfig {
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Lower bound of the inner relative tolerance; `None` means `√ε`.
    pub inner_epsilon: Option<f64>,
    /// Inner TT-GMRES settings; its `epsilon` is replaced per local problem.
    pub inner: GmresConfig,
    pub max_rank: usize,
}

impl Default for MalsConfig {
    fn default() -> Self {
        MalsConfig {
            epsilon: 1e-8,
            max_sweeps: 20,
            inner_epsilon: None,
            inner: GmresConfig { max_iters: 50, cond_estimate: 10.0, ..GmresConfig::default() },
            max_rank: usize::MAX,
        }
    }
}

impl MalsConfig {
    pub fn validate(&self) -> Result<()> {
        validate_outer(self.epsilon, self.max_sweeps, self.max_rank)?;
        validate_inner(self.inner_epsilon)?;
        self.inner.validate()
    }

    pub(crate) fn inner_epsilon(&self) -> f64 {
        self.inner_epsilon.unwrap_or(self.epsilon.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmenConfig {
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Number of residual directions appended per step.
    pub k_enrich: usize,
    /// Relative inner tolerance of the simplified variant; `None` means `√ε`.
    pub inner_epsilon: Option<f64>,
    /// Iteration cap of the dense local GMRES.
    pub local_max_iters: usize,
    /// Krylov dimension of the dense local GMRES before it restarts.
    pub local_restart: usize,
    pub max_rank: usize,
}

impl Default for AmenConfig {
    fn default() -> Self {
        AmenConfig {
            epsilon: 1e-8,
            max_sweeps: 20,
            k_enrich: 4,
            inner_epsilon: None,
            local_max_iters: 500,
            local_restart: 60,
            max_rank: usize::MAX,
        }
    }
}

impl AmenConfig {
    pub fn validate(&self) -> Result<()> {
        validate_outer(self.epsilon, self.max_sweeps, self.max_rank)?;
        validate_inner(self.inner_epsilon)?;
        if self.local_max_iters == 0 || self.local_restart == 0 {
            return Err(violation("local GMRES needs at least one iteration"));
        }
        Ok(())
    }

    pub(crate) fn inner_epsilon(&self) -> f64 {
        self.inner_epsilon.unwrap_or(self.epsilon.sqrt())
    }
}

fn validate_outer(epsilon: f64, max_sweeps: usize, max_rank: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(violation(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if max_sweeps == 0 {
        return Err(violation("max_sweeps must be at least 1"));
    }
    if max_rank == 0 {
        return Err(violation("max_rank must be at least 1"));
    }
    Ok(())
}

fn validate_inner(inner: Option<f64>) -> Result<()> {
    match inner {
        Some(e) if !(e > 0.0 && e < 1.0) => Err(violation(format!("inner_epsilon must lie in (0, 1), got {e}"))),
        _ => Ok(()),
    }
}
