//! `ibp-check` and `gibbs-sample`.

use std::fmt::Write as _;

use ctlab::measures::{ibp_residual, write_samples_csv, ReferenceMeasure};
use ctlab::rng::{self, domain};
use ctlab::stats;
use ctlab::verify::{Verdict, VerificationReport};

use super::{judged, num, Outcome, OutputFile};
use crate::catalog::{build_measure, function_label};
use crate::config::{GibbsSampleParams, IbpCheckParams};
use crate::error::{RunError, RunResult};

pub fn ibp_check(p: &IbpCheckParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "ibp-check";
    if p.measures.is_empty() || p.pairs.is_empty() {
        return Err(RunError::invalid(PATH, "needs at least one measure and one (u, h) pair"));
    }
    if p.samples < 2 {
        return Err(RunError::invalid(format!("{PATH}.samples"), "must be ≥ 2"));
    }
    let mut measures = Vec::with_capacity(p.measures.len());
    for (i, m) in p.measures.iter().enumerate() {
        let built = build_measure(m, seed, &format!("{PATH}.measures[{i}]"))?;
        for (j, pair) in p.pairs.iter().enumerate() {
            let pp = format!("{PATH}.pairs[{j}]");
            pair.u.validate().map_err(|e| RunError::at(format!("{pp}.u"), e))?;
            if pair.h == 0 || pair.h > built.n_modes() || pair.u.dimension() > built.n_modes() {
                return Err(RunError::invalid(&pp, format!("indices must lie in 1..={}", built.n_modes())));
            }
        }
        measures.push(built);
    }

    let mut out = Outcome::default();
    let mut rows = String::from("measure,function,h,residual,stderr,z\n");
    for (i, (spec, measure)) in p.measures.iter().zip(&measures).enumerate() {
        // Common samples across pairs for one measure.
        let s = rng::child_seed(seed, domain::PROBE, i as u64);
        for pair in &p.pairs {
            let e = ibp_residual(measure, &pair.u, pair.h, p.samples, s)?;
            let z = if e.stderr > 0.0 { e.mean / e.stderr } else { 0.0 };
            let label = format!("{} {} h={}", spec.label(), function_label(&pair.u), pair.h);
            let _ = writeln!(
                rows,
                "{},{},{},{},{},{}",
                spec.label().replace(',', ";"),
                function_label(&pair.u),
                pair.h,
                num(e.mean),
                num(e.stderr),
                num(z)
            );
            out.push(
                VerificationReport::new(format!("ibp {label}"), e.mean, e.stderr, p.max_z * e.stderr)
                    .with_meta("z", z)
                    .with_meta("samples", p.samples),
            );
        }
    }
    out.files.push(OutputFile::text("ibp.csv", rows));
    Ok(out)
}

pub fn gibbs_sample(p: &GibbsSampleParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "gibbs-sample";
    if p.count == 0 {
        return Err(RunError::invalid(format!("{PATH}.count"), "must be ≥ 1"));
    }
    let measure = build_measure(&p.measure, seed, &format!("{PATH}.measure"))?;
    let mut out = Outcome::default();
    let (samples, report) = match measure.as_ref() {
        ReferenceMeasure::Gibbs(g) => {
            let s = g.sample(p.count, seed)?;
            let ok = s.acceptance_rate > 0.0;
            let report =
                judged("gibbs sampler", s.acceptance_rate, 0.0, 0.0, if ok { Verdict::Pass } else { Verdict::Fail })
                    .with_meta("acceptance_rate", s.acceptance_rate)
                    .with_meta("thinning", s.thinning)
                    .with_meta("lag1_autocorrelation", s.lag1_autocorrelation)
                    .with_meta("normalizer", g.normalizer());
            (s.samples, report)
        }
        ReferenceMeasure::Gaussian(g) => {
            let s = g.sample(p.count, seed);
            (s, judged("gaussian sampler", 1.0, 0.0, 0.0, Verdict::Pass).with_meta("exact_draws", true))
        }
    };
    let norms: Vec<f64> = samples.iter().map(|x| x.norm_sq()).collect();
    out.push(report.with_meta("mean_norm_sq", stats::mean_stderr(&norms)).with_meta("count", samples.len()));
    let mut csv = Vec::new();
    write_samples_csv(&samples, &mut csv).map_err(|source| RunError::Output { path: "samples.csv".into(), source })?;
    out.files.push(OutputFile { name: "samples.csv".into(), contents: csv });
    Ok(out)
}
