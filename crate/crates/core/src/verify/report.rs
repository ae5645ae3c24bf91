//! Verdict-carrying reports, serialisable as JSON or aligned text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Outcome of a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The budget could not decide the question either way.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A residual with its error estimate, tolerance and verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub residual: f64,
    /// Standard error or quadrature error estimate (nonnegative).
    pub error_bound: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl VerificationReport {
    /// Builds a report whose verdict is pass iff `|residual| ≤ tolerance`.
    pub fn new(check: impl Into<String>, residual: f64, error_bound: f64, tolerance: f64) -> Self {
        let verdict = if residual.abs() <= tolerance { Verdict::Pass } else { Verdict::Fail };
        VerificationReport {
            check: check.into(),
            residual,
            error_bound: error_bound.abs(),
            tolerance,
            verdict,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// An ordered collection of reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<VerificationReport>,
}

impl SuiteReport {
    pub fn push(&mut self, report: VerificationReport) {
        self.reports.push(report);
    }

    pub fn any_failed(&self) -> bool {
        self.reports.iter().any(|r| r.verdict == Verdict::Fail)
    }

    pub fn any_inconclusive(&self) -> bool {
        self.reports.iter().any(|r| r.verdict == Verdict::Inconclusive)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    /// One aligned row per check.
    pub fn to_text(&self) -> String {
        let width = self.reports.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>12}  {:>10}  {:>10}  verdict", "check", "residual", "error", "tolerance");
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.4e}  {:>10.2e}  {:>10.2e}  {}",
                r.check, r.residual, r.error_bound, r.tolerance, r.verdict
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_tolerance() {
        assert!(VerificationReport::new("a", -1e-7, 0.0, 1e-6).passed());
        assert!(!VerificationReport::new("a", 2e-6, 0.0, 1e-6).passed());
        assert!(!VerificationReport::new("a", f64::NAN, 0.0, 1e-6).passed());
    }

    #[test]
    fn suite_renders_both_formats() {
        let mut s = SuiteReport::default();
        s.push(VerificationReport::new("mass", 1e-9, 1e-12, 1e-6).with_meta("points", 1201));
        s.push(VerificationReport::new("weak residual", 1.0, 0.0, 1e-4));
        assert!(s.any_failed());
        let back: SuiteReport = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let text = s.to_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("fail"));
    }
}
