//! Numerical probes of the field conditions: the one-sided bounds on the
//! divergence and on `Σ β_i F^i`, smoothing certificates, and the
//! exponential constant `C_F(δ)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{CylindricalField, FieldKind};
use crate::error::{Error, Result};
use crate::measures::{DisintegrationDensity, LadderDensity, LadderMode, LadderSpec, ReferenceMeasure, SliceDensity};
use crate::spectral::SpectralCoords;
use crate::stats::{self, Estimate};

/// Observed constants of the one-sided bounds
/// `div F ≥ -C - ε(|x|² + α|x|_p^p)` and `Σβ_iF^i ≥ -C - ε(|x|² + α|x|_p^p)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClaimsReport {
    pub epsilon: f64,
    pub c_divergence: f64,
    pub c_beta: f64,
    /// The same constants from the first half of the samples.
    pub c_divergence_half: f64,
    pub c_beta_half: f64,
    /// Both constants finite and within 10% (or 1e-12) of their half-sample values.
    pub stable: bool,
}

/// Records the smallest constants satisfying both one-sided bounds on the samples.
pub fn claims_probe(
    field: &CylindricalField,
    measure: &ReferenceMeasure,
    epsilon: f64,
    samples: &[SpectralCoords],
) -> Result<ClaimsReport> {
    crate::error::require_positive("epsilon", epsilon)?;
    field.require_differentiable()?;
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("claims probe needs at least two samples".into()));
    }
    let n = field.dim();
    let (alpha_p, t) = (measure.potential_scale(), 0.0);
    let deficits: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|x| {
            let xc = x.coeffs();
            let mut f = vec![0.0; n];
            let div = field.eval_with_divergence(t, xc, &mut f);
            let mut b = vec![0.0; n];
            measure.beta_basis(xc, &mut b);
            let bf: f64 = f.iter().zip(&b).map(|(a, c)| a * c).sum();
            let growth = x.norm_sq() + alpha_p * measure.potential(xc);
            ((-div - epsilon * growth).max(0.0), (-bf - epsilon * growth).max(0.0))
        })
        .collect();
    let max_of = |v: &[(f64, f64)]| v.iter().fold((0.0f64, 0.0f64), |acc, d| (acc.0.max(d.0), acc.1.max(d.1)));
    let (cd, cb) = max_of(&deficits);
    let (hd, hb) = max_of(&deficits[..deficits.len() / 2]);
    let close = |a: f64, b: f64| a.is_finite() && (a - b).abs() <= 0.1 * a.abs().max(b.abs()) + 1e-12;
    Ok(ClaimsReport {
        epsilon,
        c_divergence: cd,
        c_beta: cb,
        c_divergence_half: hd,
        c_beta_half: hb,
        stable: close(cd, hd) && close(cb, hb),
    })
}

impl ReferenceMeasure {
    /// `p` for Gibbs measures (so that `p · potential = α|x|_p^p`), zero otherwise.
    fn potential_scale(&self) -> f64 {
        match self {
            ReferenceMeasure::Gaussian(_) => 0.0,
            ReferenceMeasure::Gibbs(g) => g.p(),
        }
    }
}

/// Smoothing operator `Λe_n = ε_n e_n` with a divergence lower-bound certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionProbe {
    pub eps: Vec<f64>,
    /// Certified constant `C` with `div(ΛF_0) ≥ -C`.
    pub lower_bound: f64,
    pub delta: f64,
}

impl ConditionProbe {
    /// Probe for `F = Λ sin(·)`: `div F = Σ ε_n cos(x_n) ≥ -Σ ε_n`.
    pub fn new(eps: Vec<f64>, delta: f64) -> Result<Self> {
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter("smoothing eigenvalues must be positive".into()));
        }
        crate::error::require_positive("delta", delta)?;
        let lower_bound = eps.iter().sum();
        Ok(ConditionProbe { eps, lower_bound, delta })
    }

    /// `ε_n = ε_1 q^{n-1}`.
    pub fn geometric(first: f64, ratio: f64, count: usize, delta: f64) -> Result<Self> {
        Self::new((0..count).map(|n| first * ratio.powi(n as i32)).collect(), delta)
    }

    /// Partial sums `Σ_{n≤N} ε_n²` are monotone and their tail beyond half
    /// the modes is below `tol` (the Cauchy criterion).
    pub fn tail_within(&self, tol: f64) -> bool {
        let sq: Vec<f64> = self.eps.iter().map(|e| e * e).collect();
        let half = sq.len() / 2;
        stats::sum(&sq[half..]) <= tol
    }

    /// The smoothed field `ΛF_0`.
    pub fn field(&self, horizon: f64) -> Result<CylindricalField> {
        CylindricalField::new(FieldKind::Smoothed { eps: self.eps.clone() }, self.eps.len(), horizon)
    }
}

/// `δ = min_i c_i / (N(‖f_i‖_∞ + 1))` with `c_i = λ_i^{-1/2}`, the inverse
/// standard deviation of `β_{e_i}` under the Gaussian part of the measure.
pub fn suggested_delta(field: &CylindricalField, precision: &[f64]) -> f64 {
    let n = field.dim();
    let bound = field.sup_bound();
    (0..n).map(|i| precision[i].sqrt().recip() / (n as f64 * (bound + 1.0))).fold(f64::INFINITY, f64::min)
}

/// Settings for the estimate of `C_F(δ, y)`.
#[derive(Debug, Clone, Serialize)]
pub struct CfDeltaConfig {
    pub delta: f64,
    /// `(M, l)` pairs; the estimate is the maximum over them.
    pub ladder_grid: Vec<(f64, f64)>,
    pub mode: LadderMode,
    /// Radius of the ball `K` (centered at the origin) carrying the integral.
    pub radius: f64,
    /// Lattice spacing for `N ≤ 3`.
    pub spacing: f64,
    /// Monte Carlo points in the ball for `N > 3`.
    pub mc_points: usize,
    /// Trapezoid intervals in time for non-autonomous fields.
    pub time_steps: usize,
    pub seed: u64,
}

impl CfDeltaConfig {
    /// The `{1,2,4,8} × {2,4,8,16}` grid.
    pub fn default_grid() -> Vec<(f64, f64)> {
        let mut g = Vec::new();
        for m in [1.0, 2.0, 4.0, 8.0] {
            for l in [2.0, 4.0, 8.0, 16.0] {
                g.push((m, l));
            }
        }
        g
    }
}

/// Per-tail estimate with the individual ladder values.
#[derive(Debug, Clone, Serialize)]
pub struct CfDeltaReport {
    pub value: f64,
    pub per_spec: Vec<(f64, f64, f64)>,
    /// True when, for every `M`, the values are non-decreasing in `l`
    /// (informational).
    pub monotone_in_l: bool,
}

/// Points of the ball `|x| ≤ R` with their cell volume.
fn ball_points(dim: usize, cfg: &CfDeltaConfig) -> (Vec<Vec<f64>>, f64) {
    if dim <= 3 {
        let h = cfg.spacing;
        let k = (cfg.radius / h).floor() as i64;
        let side = (2 * k + 1) as usize;
        let mut pts = Vec::new();
        for idx in 0..side.pow(dim as u32) {
            let mut rem = idx;
            let x: Vec<f64> = (0..dim)
                .map(|_| {
                    let c = (rem % side) as i64 - k;
                    rem /= side;
                    c as f64 * h
                })
                .collect();
            if x.iter().map(|a| a * a).sum::<f64>() <= cfg.radius * cfg.radius {
                pts.push(x);
            }
        }
        (pts, h.powi(dim as i32))
    } else {
        use rand::Rng;
        let mut r = crate::rng::stream(cfg.seed, crate::rng::domain::PROBE, dim as u64);
        let mut pts = Vec::with_capacity(cfg.mc_points);
        while pts.len() < cfg.mc_points {
            let x: Vec<f64> = (0..dim).map(|_| r.random_range(-cfg.radius..cfg.radius)).collect();
            if x.iter().map(|a| a * a).sum::<f64>() <= cfg.radius * cfg.radius {
                pts.push(x);
            }
        }
        let vol = ball_volume(dim, cfg.radius);
        (pts, vol / cfg.mc_points as f64)
    }
}

fn ball_volume(dim: usize, r: f64) -> f64 {
    // V_n = π^{n/2} r^n / Γ(n/2 + 1), via the recursion V_n = 2π r² V_{n-2} / n.
    let mut v = [1.0, 2.0 * r];
    for n in 2..=dim {
        let next = 2.0 * std::f64::consts::PI * r * r * v[n % 2] / n as f64;
        v[n % 2] = next;
    }
    v[dim % 2]
}

/// `max_{(M,l)} ∫_0^T ∫_K (e^{δ(D*F)^+} - 1) Ψ²_{M,l} dx dt` for one slice.
pub fn cf_delta_at_tail(
    field: &CylindricalField,
    slice: Arc<dyn SliceDensity>,
    precision: &[f64],
    cfg: &CfDeltaConfig,
) -> Result<CfDeltaReport> {
    crate::error::require_positive("delta", cfg.delta)?;
    crate::error::require_positive("radius", cfg.radius)?;
    crate::error::require_positive("spacing", cfg.spacing)?;
    field.require_differentiable()?;
    if slice.dim() != field.dim() {
        return Err(Error::InvalidData("slice and field dimensions differ".into()));
    }
    if cfg.ladder_grid.is_empty() {
        return Err(Error::InvalidParameter("empty ladder grid".into()));
    }
    let n = field.dim();
    let (pts, cell) = ball_points(n, cfg);
    let times: Vec<(f64, f64)> = if field.is_autonomous() {
        vec![(0.0, field.horizon())]
    } else {
        let m = cfg.time_steps.max(1);
        let dt = field.horizon() / m as f64;
        (0..=m).map(|k| (k as f64 * dt, if k == 0 || k == m { 0.5 * dt } else { dt })).collect()
    };
    let limit = 700.0;
    let mut per_spec = Vec::new();
    let mut passthrough_value: Option<f64> = None;
    for &(m, l) in &cfg.ladder_grid {
        let lad = LadderDensity::new(slice.clone(), LadderSpec::new(m, l, cfg.mode)?, cfg.seed)?;
        if lad.is_passthrough() {
            if let Some(v) = passthrough_value {
                per_spec.push((m, l, v));
                continue;
            }
        }
        let evals: Vec<(f64, Vec<f64>)> = pts
            .par_iter()
            .map(|x| {
                let mut g = vec![0.0; n];
                let v = lad.value_and_gradient(x, &mut g);
                let lg: Vec<f64> = g.iter().map(|a| if v > 0.0 { a / v } else { 0.0 }).collect();
                (v, lg)
            })
            .collect();
        let mut total = Vec::with_capacity(times.len());
        for &(t, wt) in &times {
            let terms: Vec<Result<f64>> = pts
                .par_iter()
                .zip(&evals)
                .map(|(x, (v, lg))| {
                    let mut f = vec![0.0; n];
                    let div = field.eval_with_divergence(t, x, &mut f);
                    let ds = -div - f.iter().zip(lg).map(|(a, b)| a * b).sum::<f64>();
                    let e = cfg.delta * ds.max(0.0);
                    if e > limit {
                        return Err(Error::DeltaTooLarge { suggested: suggested_delta(field, precision) });
                    }
                    Ok(e.exp_m1() * v)
                })
                .collect();
            let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
            total.push(wt * cell * stats::sum(&terms));
        }
        let value = stats::sum(&total);
        if lad.is_passthrough() {
            passthrough_value = Some(value);
        }
        per_spec.push((m, l, value));
    }
    let value = per_spec.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let mut monotone = true;
    for &(m, l, v) in &per_spec {
        for &(m2, l2, v2) in &per_spec {
            if m == m2 && l2 > l && v2 < v - 1e-12 * v.abs() {
                monotone = false;
            }
        }
    }
    Ok(CfDeltaReport { value, per_spec, monotone_in_l: monotone })
}

/// Average of [`cf_delta_at_tail`] over `tail_samples` tail points drawn from
/// the Gaussian tail marginal.
pub fn cf_delta(
    field: &CylindricalField,
    density: &DisintegrationDensity,
    cfg: &CfDeltaConfig,
    tail_samples: usize,
) -> Result<Estimate> {
    if tail_samples == 0 {
        return Err(Error::InvalidParameter("need at least one tail sample".into()));
    }
    let precision = density.measure().gaussian().precision().to_vec();
    let mut vals = Vec::with_capacity(tail_samples);
    for k in 0..tail_samples {
        let y = density.sample_tail(cfg.seed, k as u64);
        let slice: Arc<dyn SliceDensity> = Arc::new(density.slice(&y)?);
        vals.push(cf_delta_at_tail(field, slice, &precision, cfg)?.value);
    }
    Ok(if tail_samples == 1 { Estimate::exact(vals[0]) } else { stats::mean_stderr(&vals) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{NemytskiiField, Reaction};
    use crate::measures::{GaussianMeasure, GibbsMeasure};
    use std::f64::consts::PI;

    fn gibbs(n: usize) -> ReferenceMeasure {
        ReferenceMeasure::Gibbs(GibbsMeasure::new(GaussianMeasure::dirichlet(n).unwrap(), 1.0, 4.0, 20_000, 1).unwrap())
    }

    fn cfg(delta: f64) -> CfDeltaConfig {
        CfDeltaConfig {
            delta,
            ladder_grid: CfDeltaConfig::default_grid(),
            mode: LadderMode::Auto,
            radius: 2.0,
            spacing: 1e-3,
            mc_points: 20_000,
            time_steps: 16,
            seed: 1,
        }
    }

    #[test]
    fn zero_reaction_gives_zero_constants() {
        let m = gibbs(8);
        let nem = NemytskiiField::new(Reaction::Zero, 8).unwrap();
        let f = CylindricalField::new(FieldKind::Nemytskii(nem.galerkin(8).unwrap()), 8, 1.0).unwrap();
        let s = m.sample(500, 2).unwrap();
        let r = claims_probe(&f, &m, 0.1, &s).unwrap();
        assert_eq!((r.c_divergence, r.c_beta), (0.0, 0.0));
        assert!(r.stable);
    }

    #[test]
    fn neg_arctan_constants_are_finite_and_stable() {
        let m = gibbs(8);
        let nem = NemytskiiField::new(Reaction::NegArctan, 8).unwrap();
        let f = CylindricalField::new(FieldKind::Nemytskii(nem.galerkin(8).unwrap()), 8, 1.0).unwrap();
        let s = m.sample(10_000, 3).unwrap();
        let r = claims_probe(&f, &m, 0.1, &s).unwrap();
        assert!(r.c_divergence.is_finite() && r.c_beta.is_finite());
        // -div F ≤ Σ_i α_i^{-1} for f' ∈ [-1, 0).
        let cap: f64 = (1..=8).map(|i| 1.0 / (PI * PI * (i * i) as f64)).sum();
        assert!(r.c_divergence <= cap + 1e-12);
        assert!(r.stable, "{r:?}");
    }

    #[test]
    fn smoothed_field_divergence_constant_is_epsilon_independent() {
        let probe = ConditionProbe::geometric(0.5, 0.5, 12, 0.1).unwrap();
        assert!(probe.tail_within(1e-3));
        let f = probe.field(1.0).unwrap();
        let m = ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(12).unwrap());
        let s = m.sample(4000, 5).unwrap();
        for eps in [0.1, 0.01, 0.001] {
            let r = claims_probe(&f, &m, eps, &s).unwrap();
            assert!(r.c_divergence <= probe.lower_bound + 1e-12);
        }
    }

    #[test]
    fn cf_delta_vanishes_for_zero_field_and_small_delta() {
        let m = Arc::new(gibbs(3));
        let d = DisintegrationDensity::new(m, 1).unwrap();
        let z = CylindricalField::new(FieldKind::Zero, 1, 1.0).unwrap();
        assert_eq!(cf_delta(&z, &d, &cfg(0.1), 2).unwrap().mean, 0.0);
        let nem = NemytskiiField::new(Reaction::NegArctan, 1).unwrap();
        let f = CylindricalField::new(FieldKind::Nemytskii(nem.galerkin(1).unwrap()), 1, 1.0).unwrap();
        let a = cf_delta(&f, &d, &cfg(1e-3), 2).unwrap().mean;
        let b = cf_delta(&f, &d, &cfg(1e-6), 2).unwrap().mean;
        assert!(b < 1e-2 * a && b >= 0.0);
    }

    #[test]
    fn gaussian_constant_field_matches_mgf_oracle() {
        // (D*F)^+ = (λcx)^+ on the 1-D Gaussian slice; with a = δλc,
        // ∫_0^R (e^{ax} - 1) φ_σ(x) dx has a closed form via Φ.
        let m = Arc::new(ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(1).unwrap()));
        let d = DisintegrationDensity::new(m, 1).unwrap();
        let c = 0.3;
        let f = CylindricalField::new(FieldKind::Constant(vec![c]), 1, 1.0).unwrap();
        let delta = 0.05;
        let est = cf_delta(&f, &d, &cfg(delta), 1).unwrap().mean;
        let lam = 2.0 * PI * PI;
        let s = lam.sqrt().recip();
        let a = delta * lam * c;
        let phi = |z: f64| 0.5 * statrs::function::erf::erfc(-z / 2f64.sqrt());
        let r = 2.0;
        let exact = (0.5 * a * a * s * s).exp() * (phi((r - a * s * s) / s) - phi(-a * s)) - (phi(r / s) - 0.5);
        // Lattice quadrature of an integrand with a kink at 0: O(h²) error.
        assert!((est - exact).abs() < 1e-5 * exact, "{est} vs {exact}");
    }

    #[test]
    fn forced_ladder_grid_and_overflow() {
        let m = Arc::new(gibbs(3));
        let d = DisintegrationDensity::new(m.clone(), 1).unwrap();
        let nem = NemytskiiField::new(Reaction::NegArctan, 1).unwrap();
        let f = CylindricalField::new(FieldKind::Nemytskii(nem.galerkin(1).unwrap()), 1, 1.0).unwrap();
        let mut c = cfg(0.05);
        c.mode = LadderMode::Force;
        c.spacing = 5e-3;
        let slice: Arc<dyn SliceDensity> = Arc::new(d.slice(&d.sample_tail(1, 0)).unwrap());
        let rep = cf_delta_at_tail(&f, slice.clone(), m.gaussian().precision(), &c).unwrap();
        assert_eq!(rep.per_spec.len(), 16);
        assert!(rep.value >= rep.per_spec.iter().map(|s| s.2).fold(0.0, f64::max));
        let big = CylindricalField::new(FieldKind::Constant(vec![1e4]), 1, 1.0).unwrap();
        let mut c2 = cfg(1.0);
        c2.mode = LadderMode::Auto;
        match cf_delta_at_tail(&big, slice, m.gaussian().precision(), &c2) {
            Err(Error::DeltaTooLarge { suggested }) => assert!(suggested > 0.0 && suggested < 1.0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn ball_volume_formula() {
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-14);
        assert!((ball_volume(3, 2.0) - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
        assert!((ball_volume(4, 1.0) - PI * PI / 2.0).abs() < 1e-14);
    }
}
