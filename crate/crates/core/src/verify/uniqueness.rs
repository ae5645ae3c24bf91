//! Refinement-consistency probe: solutions built from different ladder
//! elements or discretisations of the same problem should agree.

use rand::Rng;

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::measures::SliceDensity;
use crate::rng::{self, domain};
use crate::stats;
use crate::transport::{feynman_kac, TransportProblem};

/// `max_t ∫ |ρ_a(t) - ρ_b(t)| w dx`, estimated with `samples` uniform
/// points in the origin-centred box of half-width `R` (the larger support
/// radius). Returns the estimate and its standard error at the worst time.
pub fn sampled_l1_distance(
    a: &TransportProblem,
    b: &TransportProblem,
    reference: &dyn SliceDensity,
    times: &[f64],
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if a.dim() != b.dim() || a.dim() != reference.dim() {
        return Err(Error::InvalidData("problems and reference weight must share a dimension".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two sample points".into()));
    }
    let n = a.dim();
    let radius = a.support_radius().max(b.support_radius());
    let volume = (2.0 * radius).powi(n as i32);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|i| {
            let mut r = rng::stream(seed, domain::UNIQUENESS, i as u64);
            (0..n).map(|_| r.random_range(-radius..radius)).collect()
        })
        .collect();
    let mut worst = (0.0, 0.0);
    for &t in times {
        let mut vals = Vec::with_capacity(samples);
        for x in &points {
            let d = (feynman_kac(a, t, x)? - feynman_kac(b, t, x)?).abs();
            vals.push(volume * d * reference.density(x));
        }
        let e = stats::mean_stderr(&vals);
        if e.mean > worst.0 {
            worst = (e.mean, e.stderr);
        }
    }
    Ok(worst)
}

/// Pairwise sampled-L¹ distances between the solutions of `problems`;
/// passes iff the largest is within `tolerance`.
pub fn uniqueness_probe(
    problems: &[TransportProblem],
    reference: &dyn SliceDensity,
    times: &[f64],
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<VerificationReport> {
    if problems.len() < 2 {
        return Err(Error::InvalidParameter("the probe needs at least two specifications".into()));
    }
    let mut pairs = Vec::new();
    let mut worst = (0.0, 0.0);
    for i in 0..problems.len() {
        for j in i + 1..problems.len() {
            let d = sampled_l1_distance(&problems[i], &problems[j], reference, times, samples, seed)?;
            pairs.push((i, j, d.0, d.1));
            if d.0 >= worst.0 {
                worst = d;
            }
        }
    }
    Ok(VerificationReport::new("uniqueness probe", worst.0, worst.1, tolerance)
        .with_meta("pairs", pairs)
        .with_meta("samples", samples))
}
