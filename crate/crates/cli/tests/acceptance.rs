//! Acceptance suite: runs every shipped experiment config and prints one
//! `PASS`/`FAIL` line per criterion at its stated tolerance and runtime
//! budget. The process exits non-zero when any criterion fails; a commutator
//! trend that the budget cannot establish is reported as `INCONCLUSIVE`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ctlab::transport::InitialDensity;
use ctlab::verify::Verdict;
use ctlab_cli::{run_file, RunOptions, RunStatus, RunSummary};

/// Outcome of one criterion.
enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

type Extra = fn(&RunSummary) -> Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    config: &'static str,
    budget_seconds: f64,
    /// Checks beyond the run's own verdicts.
    extra: Option<Extra>,
    /// Whether an inconclusive verdict is an accepted outcome.
    may_be_inconclusive: bool,
    /// Whether `|residual| / tolerance` is meaningful; one-sided checks
    /// (signed slacks and margins) report their own detail instead.
    two_sided: bool,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        name: "fomin ibp",
        config: "ibp.toml",
        budget_seconds: 30.0,
        extra: None,
        may_be_inconclusive: false,
        two_sided: true,
    },
    Criterion {
        id: 2,
        name: "transport correctness",
        config: "transport_oracle.toml",
        budget_seconds: 10.0,
        extra: Some(closed_form_agreement),
        may_be_inconclusive: false,
        two_sided: true,
    },
    Criterion {
        id: 3,
        name: "mass conservation",
        config: "mass.toml",
        budget_seconds: 30.0,
        extra: None,
        may_be_inconclusive: false,
        two_sided: true,
    },
    Criterion {
        id: 4,
        name: "entropy bound",
        config: "entropy.toml",
        budget_seconds: 60.0,
        extra: Some(entropy_slack),
        may_be_inconclusive: false,
        two_sided: false,
    },
    Criterion {
        id: 5,
        name: "jensen ladder",
        config: "jensen.toml",
        budget_seconds: 30.0,
        extra: Some(jensen_grid),
        may_be_inconclusive: false,
        two_sided: true,
    },
    Criterion {
        id: 6,
        name: "weak formulation",
        config: "weak.toml",
        budget_seconds: 60.0,
        extra: Some(weak_orders),
        may_be_inconclusive: false,
        two_sided: true,
    },
    Criterion {
        id: 7,
        name: "uniqueness probe",
        config: "uniqueness.toml",
        budget_seconds: 30.0,
        extra: None,
        may_be_inconclusive: false,
        two_sided: true,
    },
    Criterion {
        id: 8,
        name: "spde regression",
        config: "spde.toml",
        budget_seconds: 120.0,
        extra: None,
        may_be_inconclusive: false,
        two_sided: true,
    },
    Criterion {
        id: 9,
        name: "commutator decay",
        config: "commutator.toml",
        budget_seconds: 900.0,
        extra: Some(commutator_trend),
        may_be_inconclusive: true,
        two_sided: false,
    },
    Criterion {
        id: 10,
        name: "bdg sanity",
        config: "bdg.toml",
        budget_seconds: 30.0,
        extra: Some(bdg_factor),
        may_be_inconclusive: false,
        two_sided: true,
    },
];

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn execute(config: &str, workers: usize, output: PathBuf) -> Result<(RunSummary, f64), String> {
    let opts = RunOptions { workers: Some(workers), output: Some(output), seed: None };
    let start = Instant::now();
    let summary = run_file(&config_dir().join(config), &opts).map_err(|e| format!("{config}: {e}"))?;
    Ok((summary, start.elapsed().as_secs_f64()))
}

/// Largest `|residual| / tolerance` over checks with a positive tolerance.
fn worst_ratio(summary: &RunSummary) -> f64 {
    summary
        .report
        .reports
        .iter()
        .filter(|r| r.tolerance > 0.0 && r.residual.is_finite())
        .map(|r| r.residual.abs() / r.tolerance)
        .fold(0.0, f64::max)
}

fn meta_f64(summary: &RunSummary, check: &str, key: &str) -> Option<f64> {
    summary.report.reports.iter().find(|r| r.check == check)?.metadata.get(key)?.as_f64()
}

/// Compares the Feynman–Kac density on the oracle lattice with
/// `ρ(t,x) = ρ₀(x - ct) exp(λc(xt - ct²/2))`, `λ = 2π²`, `c = 0.3`.
fn closed_form_agreement(summary: &RunSummary) -> Result<String, String> {
    const C: f64 = 0.3;
    let lambda = 2.0 * std::f64::consts::PI.powi(2);
    let rho0 = InitialDensity::bump(vec![0.0], 0.3).map_err(|e| e.to_string())?;
    let csv = std::fs::read_to_string(summary.output_dir.join("solution.csv")).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().expect("numeric csv")).collect();
        let (t, x, rho) = (v[0], v[1], v[2]);
        let exact = rho0.value(&[x - C * t]) * (lambda * C * (x * t - C * t * t / 2.0)).exp();
        worst = worst.max((rho - exact).abs());
        rows += 1;
    }
    let slope = meta_f64(summary, "pde residual order", "slope").ok_or("missing residual slope")?;
    let detail =
        format!("max |rho - closed form| = {worst:.2e} over {rows} nodes (tol 1e-6), residual slope {slope:.3}");
    if worst <= 1e-6 && (slope - 2.0).abs() <= 0.3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn entropy_slack(summary: &RunSummary) -> Result<String, String> {
    let slacks: Vec<f64> =
        summary.report.reports.iter().filter_map(|r| r.metadata.get("min_slack").and_then(|v| v.as_f64())).collect();
    let min = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    let detail = format!("{} runs, smallest slack {min:.3e}", slacks.len());
    if !slacks.is_empty() && min > 0.0 && summary.manifest.violations.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn jensen_grid(summary: &RunSummary) -> Result<String, String> {
    let csv = std::fs::read_to_string(summary.output_dir.join("jensen.csv")).map_err(|e| e.to_string())?;
    let rows = csv.lines().count() - 1;
    let mut grid = BTreeMap::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        grid.insert((f[0].to_string(), f[1].to_string(), f[2].to_string(), f[3].to_string()), ());
    }
    // Two slices × {2,10} × {4,16} × {0.01,0.05}.
    let detail = format!("{} (slice, M, l, eps) combinations, {rows} rows", grid.len());
    if grid.len() == 16 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn weak_orders(summary: &RunSummary) -> Result<String, String> {
    let weak: Vec<_> = summary.report.reports.iter().filter(|r| r.check.contains("weak residual")).collect();
    let orders: Vec<f64> = weak.iter().filter_map(|r| r.metadata.get("order").and_then(|v| v.as_f64())).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let max_res = weak.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let detail = format!(
        "{} triples, max residual {max_res:.2e} (tol 1e-4), min fitted order {min_order:.3} over {} fits",
        weak.len(),
        orders.len()
    );
    if !weak.is_empty() && max_res < 1e-4 && min_order >= 1.7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn commutator_trend(summary: &RunSummary) -> Result<String, String> {
    let csv = std::fs::read_to_string(summary.output_dir.join("commutator_curve.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> =
        csv.lines().skip(1).map(|l| l.split(',').map(|s| s.parse().expect("numeric csv")).collect()).collect();
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let margin = 2.0 * first[2].hypot(last[2]);
    Ok(format!(
        "eps {} -> {}: {:.4} -> {:.4}, drop {:.4} vs 2 combined stderr {:.2e}",
        first[0],
        last[0],
        first[1],
        last[1],
        first[1] - last[1],
        margin
    ))
}

fn bdg_factor(summary: &RunSummary) -> Result<String, String> {
    let factor = meta_f64(summary, "bdg inequality", "factor").ok_or("missing factor")?;
    let detail = format!("(12p)^p / ratio = {factor:.3e} (needs > 1e4)");
    if factor > 1e4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn judge(c: &Criterion, summary: &RunSummary, seconds: f64) -> (Status, String) {
    let checks = summary.report.reports.len();
    let passed = summary.report.reports.iter().filter(|r| r.verdict == Verdict::Pass).count();
    let mut detail = format!("{passed}/{checks} checks pass");
    if c.two_sided {
        detail = format!("{detail}, worst |residual|/tol {:.3}", worst_ratio(summary));
    }
    let mut ok = summary.manifest.status == RunStatus::Pass;
    if let Some(extra) = c.extra {
        match extra(summary) {
            Ok(d) => detail = format!("{detail}; {d}"),
            Err(d) => {
                ok = false;
                detail = format!("{detail}; {d}");
            }
        }
    }
    let in_time = seconds <= c.budget_seconds;
    detail = format!("{detail}; {seconds:.1} s (budget {} s)", c.budget_seconds);
    let status = if !ok || !in_time {
        Status::Fail
    } else if summary.manifest.inconclusive {
        if c.may_be_inconclusive {
            Status::Inconclusive
        } else {
            Status::Fail
        }
    } else {
        Status::Pass
    };
    (status, detail)
}

fn output_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    // The manifest records wall-clock time and the worker count.
    names.retain(|n| n != "manifest.json");
    names.sort();
    names
}

/// Splits text into numeric and non-numeric tokens.
fn tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| c == ',' || c == ':' || c == '[' || c == ']' || c == '{' || c == '}' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Largest relative difference between numeric tokens, or `None` when the
/// texts differ structurally.
fn numeric_gap(a: &str, b: &str) -> Option<f64> {
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.len() != tb.len() {
        return None;
    }
    let mut gap: f64 = 0.0;
    for (x, y) in ta.iter().zip(&tb) {
        if x == y {
            continue;
        }
        match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(u), Ok(v)) => gap = gap.max((u - v).abs() / u.abs().max(v.abs()).max(1.0)),
            _ => return None,
        }
    }
    Some(gap)
}

/// Repeat single-worker runs must be bit-identical; 4-worker runs must agree
/// within 1e-12.
fn determinism(first: &[(usize, PathBuf)], root: &Path) -> (Status, String) {
    let mut failures = Vec::new();
    let mut compared = 0;
    let mut worst_gap: f64 = 0.0;
    for &(index, ref dir) in first {
        let c = &CRITERIA[index];
        let again = execute(c.config, 1, root.join(format!("{}-repeat", c.id)));
        let parallel = execute(c.config, 4, root.join(format!("{}-workers4", c.id)));
        let (again, parallel) = match (again, parallel) {
            (Ok(a), Ok(p)) => (a.0, p.0),
            (Err(e), _) | (_, Err(e)) => {
                failures.push(e);
                continue;
            }
        };
        let names = output_files(dir);
        if names != output_files(&again.output_dir) || names != output_files(&parallel.output_dir) {
            failures.push(format!("{}: output file sets differ", c.config));
            continue;
        }
        for name in &names {
            let base = std::fs::read(dir.join(name)).unwrap_or_default();
            compared += 1;
            if base != std::fs::read(again.output_dir.join(name)).unwrap_or_default() {
                failures.push(format!("{}/{name}: single-worker repeat differs", c.config));
            }
            let other = std::fs::read(parallel.output_dir.join(name)).unwrap_or_default();
            if base != other {
                match numeric_gap(&String::from_utf8_lossy(&base), &String::from_utf8_lossy(&other)) {
                    Some(g) if g <= 1e-12 => worst_gap = worst_gap.max(g),
                    Some(g) => failures.push(format!("{}/{name}: 4-worker gap {g:.2e}", c.config)),
                    None => failures.push(format!("{}/{name}: 4-worker output differs structurally", c.config)),
                }
            }
        }
    }
    if failures.is_empty() {
        (
            Status::Pass,
            format!(
                "{compared} files across {} configs: repeats bit-identical, 4-worker max relative gap {worst_gap:.1e}",
                first.len()
            ),
        )
    } else {
        (Status::Fail, failures.join("; "))
    }
}

fn main() {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let root = scratch.path();
    let mut failed = 0;
    let mut first_runs = Vec::new();
    for (i, c) in CRITERIA.iter().enumerate() {
        let (status, detail) = match execute(c.config, 1, root.join(c.id.to_string())) {
            Ok((summary, seconds)) => {
                first_runs.push((i, summary.output_dir.clone()));
                judge(c, &summary, seconds)
            }
            Err(e) => (Status::Fail, e),
        };
        if matches!(status, Status::Fail) {
            failed += 1;
        }
        println!("{} {:>2} {}: {detail}", status.label(), c.id, c.name);
    }
    let (status, detail) = determinism(&first_runs, root);
    if matches!(status, Status::Fail) {
        failed += 1;
    }
    println!("{} 11 determinism: {detail}", status.label());
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
