use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use log::info;
use serde::Serialize;
use ttsolve_core::solvers::{
    rank1_precond, relative_residual, tt_amen_full, tt_amen_simplified, tt_gmres, tt_mals, GmresConfig, OrthoScheme,
    SolveReport, DEFAULT_SV_FLOOR,
};
use ttsolve_core::tt::TensorTrain;

use crate::config::{Config, Method, Problem, ProblemKind, Rhs};

pub const TRACE_HEADER: &str = "# ttsolve trace v1";
pub const COMPARISON_HEADER: &str = "# ttsolve comparison v1";
pub const RANKS_HEADER: &str = "# ttsolve ranks v1";

pub fn solve_one(cfg: &Config, p: &Problem, method: Method) -> Result<(TensorTrain, SolveReport)> {
    info!("running {method} on {}", describe(cfg));
    let out = match method {
        Method::Gmres if !cfg.precond => tt_gmres(&p.a, &p.b, &cfg.gmres(), None)?,
        Method::Gmres | Method::GmresPrecond => {
            let pre = rank1_precond(&p.a, DEFAULT_SV_FLOOR)?;
            tt_gmres(&p.a, &p.b, &cfg.gmres(), Some(&pre))?
        }
        Method::Mals => tt_mals(&p.a, &p.b, &p.x0, &cfg.mals())?,
        Method::Amen => tt_amen_full(&p.a, &p.b, &p.x0, &cfg.amen())?,
        Method::AmenSimplified => tt_amen_simplified(&p.a, &p.b, &p.x0, &cfg.amen())?,
    };
    info!(
        "{method}: converged {} after {} iterations, residual {:.3e}, {} flops",
        out.1.converged, out.1.iterations, out.1.relative_residual, out.1.total_flops
    );
    Ok(out)
}

/// Short problem label used in comparison rows.
pub fn describe(cfg: &Config) -> String {
    let p = &cfg.problem;
    let kind = match p.kind {
        ProblemKind::ConvDiff => format!("conv-diff c={}", p.c),
        ProblemKind::Identity => "identity".to_string(),
    };
    let rhs = match p.rhs {
        Rhs::Ones => "ones".to_string(),
        Rhs::Random => format!("random r={} seed={}", p.rhs_rank, cfg.seed),
    };
    format!("{kind} d={} n={} rhs={rhs}", p.d, p.n)
}

fn csv_writer(path: &Path, header: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(f, "{header}")?;
    Ok(csv::Writer::from_writer(f))
}

fn join(ranks: &[usize]) -> String {
    ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct TraceRow {
    index: usize,
    residual_estimate: f64,
    true_residual: Option<f64>,
    max_rank: usize,
    ranks: String,
    cumulative_flops: u64,
    wall_seconds: f64,
}

pub fn write_report(dir: &Path, report: &SolveReport) -> Result<()> {
    let f = File::create(dir.join("report.json")).context("creating report.json")?;
    serde_json::to_writer_pretty(BufWriter::new(f), report)?;
    let mut w = csv_writer(&dir.join("trace.csv"), TRACE_HEADER)?;
    for t in &report.trace {
        w.serialize(TraceRow {
            index: t.index,
            residual_estimate: t.residual_estimate,
            true_residual: t.true_residual,
            max_rank: t.max_rank,
            ranks: join(&t.ranks),
            cumulative_flops: t.cumulative_flops,
            wall_seconds: t.wall_seconds,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `solve`; returns whether the solver converged.
pub fn cmd_solve(cfg: &Config, out: &Path) -> Result<bool> {
    let method = cfg.single_method()?;
    let problem = cfg.build_problem()?;
    let (_, report) = solve_one(cfg, &problem, method)?;
    write_report(out, &report)?;
    Ok(report.converged)
}

#[derive(Serialize)]
struct ComparisonRow {
    method: String,
    problem: String,
    converged: bool,
    iterations: usize,
    total_flops: u64,
    relative_residual: f64,
    max_rank: usize,
    seconds: f64,
}

/// Runs every listed method on the same problem instance; returns whether
/// all of them converged.
pub fn cmd_compare(cfg: &Config, out: &Path) -> Result<bool> {
    let methods = cfg.method_list()?;
    let problem = cfg.build_problem()?;
    let label = describe(cfg);
    let mut w = csv_writer(&out.join("comparison.csv"), COMPARISON_HEADER)?;
    let mut all = true;
    for m in methods {
        let t0 = Instant::now();
        let (x, report) = solve_one(cfg, &problem, m)?;
        let seconds = t0.elapsed().as_secs_f64();
        all &= report.converged;
        w.serialize(ComparisonRow {
            method: m.to_string(),
            problem: label.clone(),
            converged: report.converged,
            iterations: report.iterations,
            total_flops: report.total_flops,
            relative_residual: relative_residual(&problem.a, &problem.b, &x)?,
            max_rank: x.max_rank(),
            seconds,
        })?;
    }
    w.flush()?;
    Ok(all)
}

#[derive(Serialize)]
struct RankRow {
    iteration: usize,
    mgs: Option<usize>,
    simgs: Option<usize>,
    precond: Option<usize>,
    naive: Option<usize>,
}

/// Krylov-basis ranks of four TT-GMRES variants, one row per Arnoldi step.
pub fn cmd_ranktrace(cfg: &Config, out: &Path) -> Result<()> {
    let problem = cfg.build_problem()?;
    let base = cfg.gmres();
    let run = |ortho: OrthoScheme, precond: bool| -> Result<Vec<usize>> {
        let g = GmresConfig { ortho, ..base.clone() };
        let report = if precond {
            let pre = rank1_precond(&problem.a, DEFAULT_SV_FLOOR)?;
            tt_gmres(&problem.a, &problem.b, &g, Some(&pre))?.1
        } else {
            tt_gmres(&problem.a, &problem.b, &g, None)?.1
        };
        info!("ranktrace {ortho:?} precond={precond}: {} steps", report.trace.len());
        Ok(report.trace.iter().map(|t| t.max_rank).collect())
    };
    let cols = [
        run(OrthoScheme::Mgs, false)?,
        run(OrthoScheme::Simgs, false)?,
        run(OrthoScheme::Mgs, true)?,
        run(OrthoScheme::Naive, false)?,
    ];
    let rows = cols.iter().map(Vec::len).max().unwrap_or(0);
    let mut w = csv_writer(&out.join("ranks.csv"), RANKS_HEADER)?;
    for i in 0..rows {
        w.serialize(RankRow {
            iteration: i + 1,
            mgs: cols[0].get(i).copied(),
            simgs: cols[1].get(i).copied(),
            precond: cols[2].get(i).copied(),
            naive: cols[3].get(i).copied(),
        })?;
    }
    w.flush()?;
    Ok(())
}
