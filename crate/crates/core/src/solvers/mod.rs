//! Linear solvers in TT format.
//!
//! * [`tt_gmres`]: inexact TT-GMRES (TT-MINRES for symmetric operators) with
//!   MGS or SIMGS orthogonalization and an optional [`RankOnePrecond`].
//! * [`tt_mals`]: two-site alternating scheme with an inner TT-GMRES.
//! * [`tt_amen_full`] and [`tt_amen_simplified`]: one-site alternating
//!   schemes with residual-based enrichment.
//!
//! All solvers return the approximate solution together with a
//! [`SolveReport`] holding the iteration trace and flop counts.

mod amen;
mod config;
mod dense_gmres;
mod env;
mod gmres;
mod local;
mod mals;
mod map;
mod ops;
mod precond;
mod report;
mod simgs;

pub use amen::{tt_amen_full, tt_amen_simplified};
pub use config::{AmenConfig, Backend, GmresConfig, MalsConfig, OrthoScheme};
pub use dense_gmres::{dense_gmres, DenseGmresResult};
pub use env::{env_update_left, env_update_right, rhs_env_update_left, rhs_env_update_right, Environment};
pub use gmres::{relative_residual, tt_gmres, tt_gmres_map};
pub use mals::tt_mals;
pub use map::TtLinearMap;
pub use precond::{rank1_precond, PreconditionedOp, RankOnePrecond, DEFAULT_SV_FLOOR};
pub use report::{SolveReport, TraceRecord, REPORT_SCHEMA_VERSION};
pub use simgs::{simgs, SimgsOutcome};
