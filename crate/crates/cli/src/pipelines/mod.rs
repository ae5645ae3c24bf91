//! One pipeline per experiment kind. Each builds (and thereby validates)
//! every library object first, then runs, returning reports and output files.

mod measures;
mod spde;
mod transport;

use ctlab::verify::{SuiteReport, Verdict, VerificationReport};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::RunResult;

/// A file to be written into the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

impl OutputFile {
    pub fn text(name: impl Into<String>, contents: String) -> Self {
        OutputFile { name: name.into(), contents: contents.into_bytes() }
    }
}

/// Everything a pipeline produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: SuiteReport,
    pub files: Vec<OutputFile>,
    /// Messages of numerically violated theorems.
    pub violations: Vec<String>,
}

impl Outcome {
    fn push(&mut self, report: VerificationReport) {
        self.reports.push(report);
    }
}

pub fn execute(config: &ExperimentConfig) -> RunResult<Outcome> {
    let seed = config.seed;
    match config.kind {
        ExperimentKind::TransportSolve => transport::transport_solve(table(&config.transport_solve), seed),
        ExperimentKind::VerifySuite => transport::verify_suite(table(&config.verify_suite), seed),
        ExperimentKind::EntropyAudit => transport::entropy_audit(table(&config.entropy_audit), seed),
        ExperimentKind::IbpCheck => measures::ibp_check(table(&config.ibp_check), seed),
        ExperimentKind::GibbsSample => measures::gibbs_sample(table(&config.gibbs_sample), seed),
        ExperimentKind::SpdeInvariant => spde::spde_invariant(table(&config.spde_invariant), seed),
        ExperimentKind::CommutatorCurve => spde::commutator_curve(table(&config.commutator_curve), seed),
        ExperimentKind::BdgCheck => spde::bdg(table(&config.bdg_check), seed),
    }
}

/// The kind's parameter table, whose presence is checked at load time.
fn table<T>(block: &Option<T>) -> &T {
    block.as_ref().expect("parameter tables are checked when the config is loaded")
}

/// A report whose verdict is set explicitly.
fn judged(check: impl Into<String>, residual: f64, error: f64, tolerance: f64, verdict: Verdict) -> VerificationReport {
    let mut r = VerificationReport::new(check, residual, error, tolerance);
    r.verdict = verdict;
    r
}

/// Formats a float for CSV with full round-trip precision.
fn num(x: f64) -> String {
    format!("{x:e}")
}
