//! Experiment runner for the `ctlab` laboratory: declarative TOML configs
//! are bound to library pipelines, and each run writes `report.json`,
//! `manifest.json` and plot-ready CSV files.
//!
//! Exit codes: `0` when every hard check passes (inconclusive checks only
//! raise the manifest's `inconclusive` flag), `1` on a failed check, `2` on
//! an invalid config, `3` when a proven inequality is numerically violated.

pub mod catalog;
pub mod config;
pub mod error;
mod pipelines;
pub mod runner;

pub use catalog::{catalog, render_catalog, CatalogEntry};
pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{RunError, RunResult, EXIT_FAILURE, EXIT_OK, EXIT_THEOREM_VIOLATION, EXIT_VALIDATION};
pub use pipelines::{Outcome, OutputFile};
pub use runner::{run, run_file, CheckVerdict, RunManifest, RunOptions, RunStatus, RunSummary};
