//! Burkholder–Davis–Gundy check for `M(t) = ∫_0^t Φ dW` with a deterministic
//! step integrand: Monte Carlo `E sup|M|^p` against `c_p (∫Φ² ds)^{p/2}`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::rng::{self, domain};
use crate::stats::{self, Estimate};

/// Sub-steps per integrand step; the running supremum inside each sub-step
/// is drawn from the Brownian-bridge maximum law.
const SUBSTEPS: usize = 16;

/// `Φ` constant on each of `values.len()` equal steps of `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepIntegrand {
    pub values: Vec<f64>,
    pub horizon: f64,
}

impl StepIntegrand {
    pub fn constant(value: f64, steps: usize, horizon: f64) -> Self {
        StepIntegrand { values: vec![value; steps], horizon }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("horizon", self.horizon)?;
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("integrand needs finite values on ≥ 1 step".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.values.len() as f64
    }

    /// `∫_0^T Φ² ds`.
    pub fn quadratic_variation(&self) -> f64 {
        let h = self.step();
        stats::sum(&self.values.iter().map(|v| v * v * h).collect::<Vec<_>>())
    }
}

/// `c_p = (12 p)^p`, valid for every `p ≥ 1`.
pub fn bdg_constant(p: f64) -> f64 {
    (12.0 * p).powf(p)
}

/// `E sup_{[0,1]} |W|^p` for a standard Brownian motion, from the series
/// `P(sup|W| < a) = (4/π) Σ_k (-1)^k/(2k+1) exp(-(2k+1)²π²/(8a²))`.
pub fn sup_moment_oracle(p: f64) -> f64 {
    let survival = |a: f64| -> f64 {
        if a <= 0.0 {
            return 1.0;
        }
        let mut s = 0.0;
        for k in 0..400 {
            let m = (2 * k + 1) as f64;
            let term = (-m * m * std::f64::consts::PI.powi(2) / (8.0 * a * a)).exp() / m;
            if term < 1e-18 {
                break;
            }
            s += if k % 2 == 0 { term } else { -term };
        }
        (1.0 - 4.0 / std::f64::consts::PI * s).clamp(0.0, 1.0)
    };
    // E Y^p = ∫ p a^{p-1} P(Y > a) da; the tail beyond a = 10 is below 1e-20.
    let (upper, n) = (10.0, 20_000);
    let h = upper / n as f64;
    let f = |a: f64| p * a.powf(p - 1.0) * survival(a);
    let mut acc = f(0.0) + f(upper);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdgReport {
    pub p: f64,
    /// `E sup|M|^p / (∫Φ²)^{p/2}`; zero when the integrand vanishes.
    pub ratio: Estimate,
    pub constant: f64,
    /// `c_p / ratio`; `None` when the integrand vanishes.
    pub factor: Option<f64>,
    /// `Φ ≡ 0`, so both sides are zero.
    pub degenerate: bool,
    /// The ratio re-estimated from an independent run with twice the samples.
    pub doubled: Estimate,
    /// The two runs agree within three combined standard errors.
    pub stable: bool,
}

impl BdgReport {
    /// The inequality holds with margin at least `min_factor`.
    pub fn holds_with(&self, min_factor: f64) -> bool {
        self.degenerate || self.factor.is_some_and(|f| f >= min_factor)
    }
}

fn bridge_max(a: f64, b: f64, var: f64, u: f64) -> f64 {
    0.5 * (a + b + ((b - a).powi(2) - 2.0 * var * u.ln()).sqrt())
}

fn sup_sample(integrand: &StepIntegrand, p: f64, r: &mut impl Rng) -> f64 {
    let h = integrand.step() / SUBSTEPS as f64;
    let (mut m, mut sup) = (0.0_f64, 0.0_f64);
    for &phi in &integrand.values {
        let var = phi * phi * h;
        for _ in 0..SUBSTEPS {
            let z: f64 = StandardNormal.sample(r);
            let next = m + var.sqrt() * z;
            let u1: f64 = 1.0 - r.random::<f64>();
            let u2: f64 = 1.0 - r.random::<f64>();
            let hi = bridge_max(m, next, var, u1);
            let lo = bridge_max(-m, -next, var, u2);
            sup = sup.max(hi).max(lo);
            m = next;
        }
    }
    sup.powf(p)
}

fn ratio_estimate(integrand: &StepIntegrand, p: f64, n_mc: usize, seed: u64) -> Estimate {
    let qv = integrand.quadratic_variation().powf(p / 2.0);
    let vals: Vec<f64> = (0..n_mc as u64)
        .into_par_iter()
        .map(|k| sup_sample(integrand, p, &mut rng::stream(seed, domain::BDG, k)) / qv)
        .collect();
    stats::mean_stderr(&vals)
}

/// Monte Carlo check of `E sup_{t≤T} |M(t)|^p ≤ c_p (∫_0^T Φ² ds)^{p/2}`.
pub fn bdg_check(p: f64, integrand: &StepIntegrand, n_mc: usize, seed: u64) -> Result<BdgReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be ≥ 1, got {p}")));
    }
    integrand.validate()?;
    if n_mc < 2 {
        return Err(Error::InvalidParameter("need at least two Monte Carlo paths".into()));
    }
    let constant = bdg_constant(p);
    if integrand.quadratic_variation() == 0.0 {
        return Ok(BdgReport {
            p,
            ratio: Estimate::exact(0.0),
            constant,
            factor: None,
            degenerate: true,
            doubled: Estimate::exact(0.0),
            stable: true,
        });
    }
    let ratio = ratio_estimate(integrand, p, n_mc, seed);
    let doubled = ratio_estimate(integrand, p, 2 * n_mc, rng::child_seed(seed, domain::BDG, 1));
    let stable = (ratio.mean - doubled.mean).abs() <= 3.0 * ratio.stderr.hypot(doubled.stderr);
    Ok(BdgReport { p, ratio, constant, factor: Some(constant / ratio.mean), degenerate: false, doubled, stable })
}
