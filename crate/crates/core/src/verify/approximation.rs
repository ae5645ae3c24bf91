//! Approximation of a finite-entropy density `ρ ≥ 0` on `H` by smooth,
//! bounded, nonnegative cylinder functions:
//!
//! `ρ_n(x) = (min(E[ρ | x_1..x_N], M)) * η_l`,
//!
//! with the conditional expectation estimated by averaging over draws of the
//! remaining coordinates. Convergence is monitored in `L¹(γ)` together with
//! the entropy `∫ρ_n ln ρ_n dγ`, which must stay uniformly bounded.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::measures::{MollifierKernel, ReferenceMeasure};
use crate::stats::{self, Estimate};

/// A density on the truncated space (all modes of the reference measure).
pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Share of the total a single `ρ ln ρ` sample may carry before the entropy
/// estimate is declared divergent.
const DOMINANCE_LIMIT: f64 = 0.05;

/// One rung `(N, M, l)` of the approximation ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproximationStage {
    pub modes: usize,
    pub clip: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationConfig {
    pub stages: Vec<ApproximationStage>,
    /// Reference-measure samples for `L¹` distances and entropies.
    pub samples: usize,
    /// Draws of the remaining coordinates per conditional expectation.
    pub tail_draws: usize,
    pub seed: u64,
}

/// `ρ_n` at one stage.
#[derive(Clone)]
pub struct CylinderApproximant {
    stage: ApproximationStage,
    rho: DensityFn,
    tails: Vec<Vec<f64>>,
    kernel: MollifierKernel,
}

impl CylinderApproximant {
    pub fn new(
        rho: DensityFn,
        measure: &ReferenceMeasure,
        stage: ApproximationStage,
        tail_draws: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = measure.n_modes();
        if stage.modes == 0 || stage.modes > n {
            return Err(Error::InvalidParameter(format!("stage uses {} modes of {n}", stage.modes)));
        }
        require_positive("clip", stage.clip)?;
        if !(stage.scale >= 1.0) {
            return Err(Error::InvalidParameter(format!("mollifier scale must be ≥ 1, got {}", stage.scale)));
        }
        let draws = if stage.modes == n { 1 } else { tail_draws.max(1) };
        let tails = (0..draws).map(|k| measure.gaussian().draw_tail(stage.modes + 1, seed, k as u64)).collect();
        let kernel = MollifierKernel::new(stage.modes, stage.scale, seed);
        Ok(CylinderApproximant { stage, rho, tails, kernel })
    }

    pub fn stage(&self) -> ApproximationStage {
        self.stage
    }

    /// `min(E[ρ | x_1..x_N], M)` before mollification.
    fn clipped_conditional(&self, head: &[f64]) -> f64 {
        let mut full = head.to_vec();
        let vals: Vec<f64> = self
            .tails
            .iter()
            .map(|tail| {
                full.truncate(head.len());
                full.extend_from_slice(tail);
                (self.rho)(&full).max(0.0)
            })
            .collect();
        stats::mean(&vals).min(self.stage.clip)
    }

    /// `ρ_n(x)`; only the first `N` coordinates of `x` are read.
    pub fn value(&self, x: &[f64]) -> f64 {
        let head = &x[..self.stage.modes];
        self.kernel.smooth(head, |z| self.clipped_conditional(z))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: ApproximationStage,
    /// `∫|ρ - ρ_n| dγ`.
    pub l1: Estimate,
    /// `∫ρ_n ln ρ_n dγ`.
    pub entropy: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    /// `∫ρ ln ρ dγ` of the target.
    pub target_entropy: Estimate,
    /// `min_a [(2a)^{-1}∫N(2aρ)dγ + |1 - ln a|∫ρ dγ]`, `N(s) = (s+1)ln(s+1) - s`.
    pub entropy_bound: f64,
    pub stages: Vec<StageReport>,
    /// L¹ distances are nonincreasing along the ladder.
    pub l1_decreasing: bool,
    /// Every stage entropy is at most twice the bound.
    pub entropy_within_bound: bool,
}

fn young(s: f64) -> f64 {
    (s + 1.0) * (s + 1.0).ln() - s
}

/// Builds the ladder of approximants and reports distances and entropies.
///
/// Fails with an infeasible-input error when the target's entropy estimate
/// is non-finite or dominated by single samples (divergent integral).
pub fn approximate_initial_density(
    rho: DensityFn,
    measure: &ReferenceMeasure,
    cfg: &ApproximationConfig,
) -> Result<ApproximationReport> {
    if cfg.stages.is_empty() {
        return Err(Error::InvalidParameter("need at least one approximation stage".into()));
    }
    if cfg.samples < 100 {
        return Err(Error::InvalidParameter("need at least 100 samples".into()));
    }
    let samples =
        measure.sample(cfg.samples, crate::rng::child_seed(cfg.seed, crate::rng::domain::APPROXIMATION, 0))?;
    let target: Vec<f64> = samples.iter().map(|x| rho(x.coeffs())).collect();
    if target.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InfeasibleInput("density must be finite and nonnegative".into()));
    }
    let ent_terms: Vec<f64> = target.iter().map(|&r| if r > 0.0 { r * r.ln() } else { 0.0 }).collect();
    let total: f64 = ent_terms.iter().map(|v| v.abs()).sum();
    let largest = ent_terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !total.is_finite() || largest > DOMINANCE_LIMIT * total {
        return Err(Error::InfeasibleInput(format!(
            "entropy estimate diverges (largest sample carries {:.1}% of the total)",
            100.0 * largest / total
        )));
    }
    let target_entropy = stats::mean_stderr(&ent_terms);
    let mass = stats::mean(&target);
    let entropy_bound = (-8..=8)
        .map(|k| {
            let a = 2f64.powf(k as f64 / 2.0);
            let young_mean = stats::mean(&target.iter().map(|&r| young(2.0 * a * r)).collect::<Vec<_>>());
            young_mean / (2.0 * a) + (1.0 - a.ln()).abs() * mass
        })
        .fold(f64::INFINITY, f64::min);

    let mut stages = Vec::with_capacity(cfg.stages.len());
    for (i, &stage) in cfg.stages.iter().enumerate() {
        let approx =
            CylinderApproximant::new(rho.clone(), measure, stage, cfg.tail_draws, cfg.seed.wrapping_add(i as u64))?;
        let values: Vec<f64> = {
            use rayon::prelude::*;
            samples.par_iter().map(|x| approx.value(x.coeffs())).collect()
        };
        let l1: Vec<f64> = values.iter().zip(&target).map(|(a, b)| (a - b).abs()).collect();
        let ent: Vec<f64> = values.iter().map(|&r| if r > 0.0 { r * r.ln() } else { 0.0 }).collect();
        stages.push(StageReport { stage, l1: stats::mean_stderr(&l1), entropy: stats::mean_stderr(&ent) });
    }
    let l1_decreasing = stages.windows(2).all(|w| w[1].l1.mean <= w[0].l1.mean);
    let entropy_within_bound = stages.iter().all(|s| s.entropy.mean <= 2.0 * entropy_bound);
    Ok(ApproximationReport { target_entropy, entropy_bound, stages, l1_decreasing, entropy_within_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GaussianMeasure;

    fn gaussian(n: usize) -> ReferenceMeasure {
        ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(n).unwrap())
    }

    fn stage(modes: usize, clip: f64, scale: f64) -> ApproximationStage {
        ApproximationStage { modes, clip, scale }
    }

    #[test]
    fn smooth_cylinder_density_is_reproduced() {
        let rho: DensityFn = Arc::new(|x: &[f64]| 1.0 + 0.5 * (3.0 * x[0]).sin());
        let cfg = ApproximationConfig { stages: vec![stage(1, 10.0, 32.0)], samples: 2000, tail_draws: 4, seed: 1 };
        let r = approximate_initial_density(rho, &gaussian(3), &cfg).unwrap();
        assert!(r.stages[0].l1.mean < 1e-3, "{:?}", r.stages[0]);
    }

    #[test]
    fn kinked_profile_distance_halves_along_the_ladder() {
        // c (1 + |x_1|)^{-4} with x_1 rescaled to unit variance.
        let s = 1.0 / GaussianMeasure::dirichlet(1).unwrap().variance(1).sqrt();
        let rho: DensityFn = Arc::new(move |x: &[f64]| 2.0 * (1.0 + (s * x[0]).abs()).powi(-4));
        let cfg = ApproximationConfig {
            stages: vec![stage(1, 4.0, 2.0 * s), stage(1, 8.0, 4.0 * s), stage(2, 16.0, 8.0 * s)],
            samples: 4000,
            tail_draws: 8,
            seed: 2,
        };
        let r = approximate_initial_density(rho, &gaussian(4), &cfg).unwrap();
        assert!(r.l1_decreasing);
        for w in r.stages.windows(2) {
            assert!(w[1].l1.mean <= 0.5 * w[0].l1.mean, "{:?}", r.stages);
        }
        assert!(r.entropy_within_bound, "{r:?}");
    }

    #[test]
    fn infinite_entropy_is_rejected() {
        let lambda = GaussianMeasure::dirichlet(1).unwrap().precision()[0];
        // ρ dγ has a Cauchy-like x_1 marginal: integrable, but ρ ln ρ is not.
        let rho: DensityFn = Arc::new(move |x: &[f64]| {
            let z = lambda * x[0] * x[0];
            (0.5 * z).exp() / (1.0 + z)
        });
        let cfg = ApproximationConfig { stages: vec![stage(1, 4.0, 4.0)], samples: 20_000, tail_draws: 1, seed: 3 };
        assert!(matches!(approximate_initial_density(rho, &gaussian(1), &cfg), Err(Error::InfeasibleInput(_))));
    }
}
