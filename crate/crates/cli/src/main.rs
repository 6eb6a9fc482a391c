//! `ttsolve`: runs the tensor-train solvers on generated problems and writes
//! reports, iteration traces, method comparisons and Krylov rank traces.
//!
//! Exit codes: 0 on success (every solve converged), 1 when a solver did not
//! converge (reports are still written), 2 on invalid input or I/O failure.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "ttsolve", version, about = "Tensor-train linear solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Threads used by the matrix-multiplication kernels.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Overrides the `seed` of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem; writes report.json and trace.csv.
    Solve(Common),
    /// Run several methods on one problem; writes comparison.csv.
    Compare(Common),
    /// Krylov ranks of TT-GMRES variants; writes ranks.csv.
    Ranktrace(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("TTSOLVE_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ttsolve: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn prepare(common: &Common) -> Result<Config> {
    if common.threads == 0 {
        anyhow::bail!("--threads must be at least 1");
    }
    // Read once by the GEMM thread pool on first use.
    std::env::set_var("MATMUL_NUM_THREADS", common.threads.to_string());
    let mut cfg = Config::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    create_dir(&common.out)?;
    Ok(cfg)
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Solve(c) => run::cmd_solve(&prepare(&c)?, &c.out),
        Command::Compare(c) => run::cmd_compare(&prepare(&c)?, &c.out),
        Command::Ranktrace(c) => run::cmd_ranktrace(&prepare(&c)?, &c.out).map(|_| true),
    }
}
