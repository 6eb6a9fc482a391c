//! Run configuration read from a TOML file.
//!
//! ```toml
//! method = "amen-simplified"      # gmres | gmres-precond | mals | amen | amen-simplified
//! methods = ["gmres", "mals"]     # compare only
//! epsilon = 1e-8
//! max_iters = 20                  # Arnoldi steps for gmres, sweeps otherwise
//! precond = false
//! backend = "fast"                # fast | standard
//! k_enrich = 4
//! inner_epsilon = 1e-4
//! max_rank = 200
//! seed = 0
//!
//! [problem]
//! kind = "conv-diff"              # conv-diff | identity
//! d = 6
//! n = 10
//! c = 10.0
//! rhs = "ones"                    # ones | random
//! rhs_rank = 5
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use ttsolve_core::problems::{conv_diff_operator, rhs_ones, rhs_random};
use ttsolve_core::solvers::{AmenConfig, Backend, GmresConfig, MalsConfig};
use ttsolve_core::tt::{TensorTrain, TtOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gmres,
    GmresPrecond,
    Mals,
    Amen,
    AmenSimplified,
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gmres" => Method::Gmres,
            "gmres-precond" => Method::GmresPrecond,
            "mals" => Method::Mals,
            "amen" => Method::Amen,
            "amen-simplified" => Method::AmenSimplified,
            other => bail!("unknown method {other:?}"),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gmres => "gmres",
            Method::GmresPrecond => "gmres-precond",
            Method::Mals => "mals",
            Method::Amen => "amen",
            Method::AmenSimplified => "amen-simplified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    #[default]
    ConvDiff,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Rhs {
    #[default]
    Ones,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub kind: ProblemKind,
    pub d: usize,
    pub n: usize,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub rhs: Rhs,
    #[serde(default = "one")]
    pub rhs_rank: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub method: Option<String>,
    #[serde(default)]
    pub methods: Vec<String>,
    pub problem: ProblemSpec,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub precond: bool,
    #[serde(default)]
    pub backend: Backend,
    pub k_enrich: Option<usize>,
    pub inner_epsilon: Option<f64>,
    pub max_rank: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_epsilon() -> f64 {
    1e-8
}

/// Operator, right-hand side and zero initial guess of one run.
pub struct Problem {
    pub a: TtOperator,
    pub b: TensorTrain,
    pub x0: TensorTrain,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Config = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.d == 0 || p.n < 2 {
            bail!("problem needs d ≥ 1 and n ≥ 2, got d = {}, n = {}", p.d, p.n);
        }
        if p.rhs_rank == 0 {
            bail!("rhs_rank must be at least 1");
        }
        if !p.c.is_finite() {
            bail!("convection coefficient must be finite");
        }
        for m in self.method.iter().chain(&self.methods) {
            m.parse::<Method>()?;
        }
        self.gmres().validate()?;
        self.mals().validate()?;
        self.amen().validate()?;
        Ok(())
    }

    /// Method of `solve`.
    pub fn single_method(&self) -> Result<Method> {
        match (&self.method, self.methods.as_slice()) {
            (Some(m), _) => m.parse(),
            (None, [m]) => m.parse(),
            _ => bail!("solve needs exactly one `method`"),
        }
    }

    /// Methods of `compare`: `methods`, or `method` alone.
    pub fn method_list(&self) -> Result<Vec<Method>> {
        let names: Vec<&String> =
            if self.methods.is_empty() { self.method.iter().collect() } else { self.methods.iter().collect() };
        if names.is_empty() {
            bail!("compare needs `methods`");
        }
        names.into_iter().map(|m| m.parse()).collect()
    }

    pub fn gmres(&self) -> GmresConfig {
        let mut g = GmresConfig { epsilon: self.epsilon, backend: self.backend, ..GmresConfig::default() };
        if let Some(m) = self.max_iters {
            g.max_iters = m;
        }
        if let Some(r) = self.max_rank {
            g.max_rank = r;
        }
        g
    }

    pub fn mals(&self) -> MalsConfig {
        let mut m = MalsConfig { epsilon: self.epsilon, inner_epsilon: self.inner_epsilon, ..MalsConfig::default() };
        m.inner.backend = self.backend;
        if let Some(s) = self.max_iters {
            m.max_sweeps = s;
        }
        if let Some(r) = self.max_rank {
            m.max_rank = r;
        }
        m
    }

    pub fn amen(&self) -> AmenConfig {
        let mut a = AmenConfig { epsilon: self.epsilon, inner_epsilon: self.inner_epsilon, ..AmenConfig::default() };
        if let Some(k) = self.k_enrich {
            a.k_enrich = k;
        }
        if let Some(s) = self.max_iters {
            a.max_sweeps = s;
        }
        if let Some(r) = self.max_rank {
            a.max_rank = r;
        }
        a
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let p = &self.problem;
        let dims = vec![p.n; p.d];
        let a = match p.kind {
            ProblemKind::ConvDiff => conv_diff_operator(&dims, p.c)?,
            ProblemKind::Identity => TtOperator::identity(&dims)?,
        };
        let b = match p.rhs {
            Rhs::Ones => rhs_ones(&dims)?,
            Rhs::Random => rhs_random(&dims, p.rhs_rank, self.seed)?,
        };
        let x0 = TensorTrain::constant(&dims, 0.0)?;
        Ok(Problem { a, b, x0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Config> {
        let c: Config = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn minimal_config() {
        let c = parse("method = \"mals\"\n[problem]\nd = 3\nn = 4\n").unwrap();
        assert_eq!(c.single_method().unwrap(), Method::Mals);
        assert_eq!(c.epsilon, 1e-8);
        assert_eq!(c.problem.rhs, Rhs::Ones);
        assert_eq!(c.mals().max_sweeps, MalsConfig::default().max_sweeps);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse("method = \"cg\"\n[problem]\nd = 3\nn = 4\n").is_err());
        assert!(parse("method = \"mals\"\nepsilon = 2.0\n[problem]\nd = 3\nn = 4\n").is_err());
        assert!(parse("method = \"mals\"\n[problem]\nd = 3\nn = 1\n").is_err());
        assert!(parse("method = \"mals\"\ncolour = 1\n[problem]\nd = 3\nn = 4\n").is_err());
    }

    #[test]
    fn method_lists() {
        let c = parse("methods = [\"gmres\", \"amen\"]\n[problem]\nd = 2\nn = 3\n").unwrap();
        assert_eq!(c.method_list().unwrap(), vec![Method::Gmres, Method::Amen]);
        assert!(c.single_method().is_err());
    }
}
