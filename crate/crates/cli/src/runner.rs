//! Runs one experiment on a worker pool and writes its outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ctlab::verify::{SuiteReport, Verdict};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{RunError, RunResult, EXIT_FAILURE, EXIT_OK, EXIT_THEOREM_VIOLATION};
use crate::pipelines::{execute, OutputFile};

/// Command-line overrides of the config's global settings.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    Fail,
    TheoremViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub check: String,
    pub verdict: Verdict,
}

/// Provenance and verdict summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub status: RunStatus,
    /// Set when some check could not be decided within its budget.
    pub inconclusive: bool,
    pub violations: Vec<String>,
    pub verdicts: Vec<CheckVerdict>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Pass => EXIT_OK,
            RunStatus::Fail => EXIT_FAILURE,
            RunStatus::TheoremViolation => EXIT_THEOREM_VIOLATION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub report: SuiteReport,
    pub output_dir: PathBuf,
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> RunResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| RunError::Output { path, source })
}

/// Applies the overrides, runs the pipeline and writes `report.json`,
/// `manifest.json` and the pipeline's CSV files.
pub fn run(mut config: ExperimentConfig, opts: &RunOptions) -> RunResult<RunSummary> {
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let workers = opts.workers.or(config.workers).unwrap_or(1);
    if workers == 0 {
        return Err(RunError::invalid("workers", "must be ≥ 1"));
    }
    let output_dir = opts.output.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::invalid("workers", e.to_string()))?;

    let start = Instant::now();
    let outcome = pool.install(|| execute(&config))?;
    let wall_clock_seconds = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&output_dir).map_err(|source| RunError::Output { path: output_dir.clone(), source })?;
    let mut files: Vec<OutputFile> = outcome.files;
    files.push(OutputFile::text("report.json", outcome.reports.to_json()));
    for f in &files {
        write(&output_dir, &f.name, &f.contents)?;
    }
    let status = if !outcome.violations.is_empty() {
        RunStatus::TheoremViolation
    } else if outcome.reports.any_failed() {
        RunStatus::Fail
    } else {
        RunStatus::Pass
    };
    let manifest = RunManifest {
        kind: config.kind,
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        workers,
        wall_clock_seconds,
        status,
        inconclusive: outcome.reports.any_inconclusive(),
        violations: outcome.violations,
        verdicts: outcome
            .reports
            .reports
            .iter()
            .map(|r| CheckVerdict { check: r.check.clone(), verdict: r.verdict })
            .collect(),
        outputs: files.iter().map(|f| f.name.clone()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write(&output_dir, "manifest.json", json.as_bytes())?;
    Ok(RunSummary { manifest, report: outcome.reports, output_dir })
}

pub fn run_file(path: &Path, opts: &RunOptions) -> RunResult<RunSummary> {
    run(ExperimentConfig::load(path)?, opts)
}
