use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ttsolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttsolve")).args(args).output().unwrap()
}

fn run_with(sub: &str, toml: &str, extra: &[&str]) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, toml).unwrap();
    let out = dir.path().join("out");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = ttsolve(&args);
    (dir, o)
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join("out").join(name)).unwrap()
}

/// Data rows of a CSV file written by the tool, keyed by header name.
fn rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# ttsolve "));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(str::to_owned)).collect()).collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap().1
}

fn report(dir: &TempDir) -> serde_json::Value {
    serde_json::from_str(&read(dir, "report.json")).unwrap()
}

#[test]
fn identity_solves_in_one_step() {
    let (dir, o) = run_with("solve", "method = \"gmres\"\n[problem]\nkind = \"identity\"\nd = 3\nn = 4\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = rows(&read(&dir, "trace.csv"));
    assert_eq!(trace.len(), 1);
    assert_eq!(report(&dir)["converged"], true);
}

#[test]
fn amen_reaches_the_tolerance() {
    let toml = "method = \"amen-simplified\"\n[problem]\nd = 6\nn = 10\nc = 10.0\n";
    let (dir, o) = run_with("solve", toml, &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&dir);
    assert!(r["relative_residual"].as_f64().unwrap() <= 1e-8);
    let trace = rows(&read(&dir, "trace.csv"));
    let last: f64 = field(trace.last().unwrap(), "true_residual").parse().unwrap();
    assert!(last <= 1e-8);
    let ranks = field(trace.last().unwrap(), "ranks");
    assert_eq!(ranks.split(';').count(), 7);
}

#[test]
fn iteration_cap_exits_with_one() {
    let toml = "method = \"gmres\"\nmax_iters = 1\n[problem]\nd = 4\nn = 6\n";
    let (dir, o) = run_with("solve", toml, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(&dir)["converged"], false);
}

#[test]
fn compare_writes_one_row_per_method() {
    let toml = "methods = [\"gmres\", \"gmres-precond\", \"mals\", \"amen\", \"amen-simplified\"]\n\
                [problem]\nd = 3\nn = 5\n";
    let (dir, o) = run_with("compare", toml, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&dir, "comparison.csv");
    assert!(text.starts_with("# ttsolve comparison v1\n"));
    let table = rows(&text);
    let methods: Vec<&str> = table.iter().map(|r| field(r, "method")).collect();
    assert_eq!(methods, ["gmres", "gmres-precond", "mals", "amen", "amen-simplified"]);
    for r in &table {
        assert_eq!(field(r, "converged"), "true");
        assert!(field(r, "relative_residual").parse::<f64>().unwrap() <= 1e-8);
        assert!(field(r, "total_flops").parse::<u64>().unwrap() > 0);
    }
}

#[test]
fn ranktrace_single_step() {
    let toml = "max_iters = 1\n[problem]\nd = 4\nn = 6\n";
    let (dir, o) = run_with("ranktrace", toml, &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = read(&dir, "ranks.csv");
    assert!(text.starts_with("# ttsolve ranks v1\n"));
    let table = rows(&text);
    assert_eq!(table.len(), 1);
    assert_eq!(field(&table[0], "iteration"), "1");
    for col in ["mgs", "simgs", "precond", "naive"] {
        assert!(field(&table[0], col).parse::<usize>().unwrap() >= 1);
    }
}

#[test]
fn invalid_input_exits_with_two() {
    let (_d, o) = run_with("solve", "method = \"gmres\"\nbogus = 1\n[problem]\nd = 3\nn = 4\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let (_d, o) = run_with("solve", "method = \"cg\"\n[problem]\nd = 3\nn = 4\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let (_d, o) = run_with("solve", "method = \"gmres\"\nepsilon = 2.0\n[problem]\nd = 3\nn = 4\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let (_d, o) = run_with("solve", "method = \"gmres\"\n[problem]\nd = 3\nn = 4\n", &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ttsolve(&["solve", "--config", "/nonexistent/run.toml", "--out", "/tmp/never"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(ttsolve(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ttsolve(&["--help"]).status.code(), Some(0));
}

fn trace_without_time(dir: &Path) -> Vec<String> {
    let text = fs::read_to_string(dir.join("trace.csv")).unwrap();
    let rows = rows(&text);
    rows.iter()
        .map(|r| r.iter().filter(|(k, _)| k != "wall_seconds").map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(","))
        .collect()
}

#[test]
fn runs_are_reproducible() {
    let toml = "method = \"amen\"\n[problem]\nd = 4\nn = 6\nrhs = \"random\"\nrhs_rank = 3\n";
    let (a, oa) = run_with("solve", toml, &["--seed", "7"]);
    let (b, ob) = run_with("solve", toml, &["--seed", "7"]);
    let (c, _) = run_with("solve", toml, &["--seed", "8"]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    let ta = trace_without_time(&a.path().join("out"));
    assert_eq!(ta, trace_without_time(&b.path().join("out")));
    assert_ne!(ta, trace_without_time(&c.path().join("out")));
    assert!(read(&a, "trace.csv").starts_with("# ttsolve trace v1\n"));
}
