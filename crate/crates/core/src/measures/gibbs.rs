//! Gibbs measure `γ(dx) = Z^{-1} exp(-(α/p)∫|x|^p) N(0,Q)(dx)` and its
//! independence-Metropolis sampler.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::GaussianMeasure;
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::spectral::{QuadratureGrid, SpectralBasis, SpectralCoords};
use crate::stats::{self, Estimate};

/// Proposals used to tune the thinning interval before sampling.
const ADAPTATION_WINDOW: usize = 4000;
/// Largest admissible thinning interval.
const MAX_THINNING: usize = 500;

/// Gibbs measure over a truncated Gaussian base.
#[derive(Debug, Clone)]
pub struct GibbsMeasure {
    base: GaussianMeasure,
    alpha: f64,
    p: f64,
    basis: Arc<SpectralBasis>,
    normalizer: Estimate,
}

/// Output of the Gibbs sampler together with its chain diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsSample {
    pub samples: Vec<SpectralCoords>,
    pub acceptance_rate: f64,
    pub thinning: usize,
    /// Lag-one autocorrelation of `|x|²_H` along the thinned output.
    pub lag1_autocorrelation: f64,
}

impl GibbsMeasure {
    /// Builds the measure and estimates `Z` by importance sampling from the
    /// base Gaussian with `normalizer_samples` draws.
    pub fn new(base: GaussianMeasure, alpha: f64, p: f64, normalizer_samples: usize, seed: u64) -> Result<Self> {
        let basis = Arc::new(Self::default_basis(base.n_modes(), p)?);
        Self::with_basis(base, alpha, p, basis, normalizer_samples, seed)
    }

    /// As [`GibbsMeasure::new`] with an explicit quadrature basis for `∫|x|^p`.
    pub fn with_basis(
        base: GaussianMeasure,
        alpha: f64,
        p: f64,
        basis: Arc<SpectralBasis>,
        normalizer_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be ≥ 0, got {alpha}")));
        }
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must exceed 2, got {p}")));
        }
        if basis.n_modes() < base.n_modes() {
            return Err(Error::InvalidParameter("quadrature basis has fewer modes than the measure".into()));
        }
        let mut m = GibbsMeasure { base, alpha, p, basis, normalizer: Estimate::exact(1.0) };
        if alpha > 0.0 {
            if normalizer_samples < 2 {
                return Err(Error::InvalidParameter("normalizer needs at least two samples".into()));
            }
            m.normalizer = m.estimate_normalizer(normalizer_samples, seed);
        }
        Ok(m)
    }

    /// Quadrature used by default: the exact midpoint grid for even integer
    /// `p` (the integrands are trigonometric polynomials), otherwise 512-node
    /// Gauss–Legendre.
    pub fn default_basis(n_modes: usize, p: f64) -> Result<SpectralBasis> {
        let grid = if p.fract() == 0.0 && (p as i64) % 2 == 0 {
            QuadratureGrid::exact_for_polynomial(n_modes, p as usize - 1)
        } else {
            QuadratureGrid::default_grid()
        };
        SpectralBasis::new(grid, n_modes)
    }

    pub fn base(&self) -> &GaussianMeasure {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn n_modes(&self) -> usize {
        self.base.n_modes()
    }

    /// Importance-sampling estimate of `Z` with its standard error.
    pub fn normalizer(&self) -> Estimate {
        self.normalizer
    }

    #[inline]
    fn abs_pow(&self, v: f64) -> f64 {
        if self.p == 4.0 {
            let s = v * v;
            s * s
        } else {
            v.abs().powf(self.p)
        }
    }

    #[inline]
    fn signed_pow(&self, v: f64) -> f64 {
        if self.p == 4.0 {
            v * v * v
        } else {
            v.abs().powf(self.p - 2.0) * v
        }
    }

    /// `(α/p) ∫|v|^p` for grid samples `v` of a function.
    pub fn potential_from_values(&self, values: &[f64]) -> f64 {
        let s: f64 = self.basis.grid().weights().iter().zip(values).map(|(w, v)| w * self.abs_pow(*v)).sum();
        self.alpha / self.p * s
    }

    /// `(α/p) ∫|x(ξ)|^p dξ` for coefficients `x`.
    pub fn potential(&self, x: &[f64]) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        let mut v = vec![0.0; self.basis.grid_len()];
        self.basis.synthesize_into(x, &mut v);
        self.potential_from_values(&v)
    }

    /// `out[i] = α ∫ e_{i+1} |v|^{p-2} v` for the first `out.len()` modes.
    pub fn nonlinear_gradient_from_values(&self, values: &[f64], out: &mut [f64]) {
        if self.alpha == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let g: Vec<f64> = values.iter().map(|v| self.signed_pow(*v)).collect();
        self.basis.project_into(&g, out);
        out.iter_mut().for_each(|o| *o *= self.alpha);
    }

    /// `β_{e_i}(x)` for `i = 1..=out.len()`.
    pub fn beta_basis(&self, x: &[f64], out: &mut [f64]) {
        let mut v = vec![0.0; self.basis.grid_len()];
        self.basis.synthesize_into(x, &mut v);
        self.nonlinear_gradient_from_values(&v, out);
        for (i, o) in out.iter_mut().enumerate() {
            let xi = x.get(i).copied().unwrap_or(0.0);
            *o = -self.base.precision()[i] * xi - *o;
        }
    }

    /// `β_h(x) = -Σ h_i λ_i x_i - α Σ h_i ∫ e_i |x|^{p-2} x`.
    pub fn beta(&self, h: &[f64], x: &[f64]) -> f64 {
        let mut b = vec![0.0; h.len()];
        self.beta_basis(x, &mut b);
        h.iter().zip(&b).map(|(a, c)| a * c).sum()
    }

    fn estimate_normalizer(&self, count: usize, seed: u64) -> Estimate {
        let vals: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|k| {
                let mut x = vec![0.0; self.n_modes()];
                self.base.draw_into(seed, domain::NORMALIZER, k as u64, &mut x);
                (-self.potential(&x)).exp()
            })
            .collect();
        stats::mean_stderr(&vals)
    }

    /// Draws `count` states by independence Metropolis with the base
    /// Gaussian as proposal. The thinning interval is the smallest lag at
    /// which the pilot chain's `|x|²_H` autocorrelation drops below 0.1.
    pub fn sample(&self, count: usize, seed: u64) -> Result<GibbsSample> {
        let n = self.n_modes();
        if self.alpha == 0.0 {
            return Ok(GibbsSample {
                samples: self.base.sample(count, seed),
                acceptance_rate: 1.0,
                thinning: 1,
                lag1_autocorrelation: 0.0,
            });
        }
        let mut r = rng::stream(seed, domain::GIBBS_CHAIN, 0);
        let prec: Vec<f64> = self.base.precision().iter().map(|l| l.sqrt().recip()).collect();
        let mut grid_vals = vec![0.0; self.basis.grid_len()];
        let propose = |r: &mut rand_chacha::ChaCha8Rng, out: &mut [f64]| {
            for (o, s) in out.iter_mut().zip(&prec) {
                let z: f64 = r.sample(StandardNormal);
                *o = z * s;
            }
        };
        let mut x = vec![0.0; n];
        propose(&mut r, &mut x);
        self.basis.synthesize_into(&x, &mut grid_vals);
        let mut v = self.potential_from_values(&grid_vals);
        let mut cand = vec![0.0; n];
        let mut accepted = 0usize;
        let mut step = |r: &mut rand_chacha::ChaCha8Rng, x: &mut Vec<f64>, v: &mut f64, accepted: &mut usize| {
            propose(r, &mut cand);
            self.basis.synthesize_into(&cand, &mut grid_vals);
            let vc = self.potential_from_values(&grid_vals);
            let u: f64 = r.random();
            if u.ln() < *v - vc {
                x.copy_from_slice(&cand);
                *v = vc;
                *accepted += 1;
            }
        };

        let mut pilot = Vec::with_capacity(ADAPTATION_WINDOW);
        for _ in 0..ADAPTATION_WINDOW {
            step(&mut r, &mut x, &mut v, &mut accepted);
            pilot.push(x.iter().map(|a| a * a).sum::<f64>());
        }
        let pilot_rate = accepted as f64 / ADAPTATION_WINDOW as f64;
        if pilot_rate < 0.01 {
            return Err(Error::SamplerDegenerate(format!(
                "acceptance rate {pilot_rate:.4} after {ADAPTATION_WINDOW} proposals (alpha·p too aggressive for {n} modes)"
            )));
        }
        let thinning = (1..=MAX_THINNING)
            .find(|&k| lag_autocorrelation(&pilot, k) < 0.1)
            .ok_or_else(|| Error::SamplerDegenerate("chain does not decorrelate within 500 steps".into()))?;

        accepted = 0;
        let mut samples = Vec::with_capacity(count);
        let mut norms = Vec::with_capacity(count);
        for _ in 0..count {
            for _ in 0..thinning {
                step(&mut r, &mut x, &mut v, &mut accepted);
            }
            norms.push(x.iter().map(|a| a * a).sum::<f64>());
            samples.push(SpectralCoords::new(x.clone())?);
        }
        let total = (count * thinning).max(1);
        Ok(GibbsSample {
            samples,
            acceptance_rate: accepted as f64 / total as f64,
            thinning,
            lag1_autocorrelation: stats::lag1_autocorrelation(&norms),
        })
    }
}

/// Sample autocorrelation at lag `k`.
fn lag_autocorrelation(v: &[f64], k: usize) -> f64 {
    if k >= v.len() / 2 {
        return 0.0;
    }
    let m = stats::mean(v);
    let num: Vec<f64> = v.iter().zip(&v[k..]).map(|(a, b)| (a - m) * (b - m)).collect();
    let den: Vec<f64> = v.iter().map(|a| (a - m) * (a - m)).collect();
    let d = stats::sum(&den);
    if d == 0.0 {
        0.0
    } else {
        stats::sum(&num) / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gibbs(n: usize) -> GibbsMeasure {
        GibbsMeasure::new(GaussianMeasure::dirichlet(n).unwrap(), 1.0, 4.0, 50_000, 5).unwrap()
    }

    #[test]
    fn beta_examples() {
        let g = gibbs(3);
        assert_eq!(g.beta(&[1.0, 0.0, 0.0], &[0.0; 3]), 0.0);
        let b = g.beta(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        assert!((b - (-2.0 * PI * PI - 1.5)).abs() < 1e-12, "{b}");
    }

    #[test]
    fn exact_grid_agrees_with_gauss_legendre() {
        let base = GaussianMeasure::dirichlet(4).unwrap();
        let fine = Arc::new(SpectralBasis::new(QuadratureGrid::default_grid(), 4).unwrap());
        let a = GibbsMeasure::new(base.clone(), 1.0, 4.0, 10, 1).unwrap();
        let b = GibbsMeasure::with_basis(base, 1.0, 4.0, fine, 10, 1).unwrap();
        let x = [0.4, -0.2, 0.1, 0.05];
        assert!((a.potential(&x) - b.potential(&x)).abs() < 1e-14);
        let (mut ba, mut bb) = ([0.0; 4], [0.0; 4]);
        a.beta_basis(&x, &mut ba);
        b.beta_basis(&x, &mut bb);
        for k in 0..4 {
            assert!((ba[k] - bb[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let base = GaussianMeasure::dirichlet(2).unwrap();
        assert!(GibbsMeasure::new(base.clone(), -1.0, 4.0, 10, 1).is_err());
        assert!(GibbsMeasure::new(base, 1.0, 2.0, 10, 1).is_err());
    }

    #[test]
    fn alpha_zero_reduces_to_gaussian() {
        let base = GaussianMeasure::dirichlet(3).unwrap();
        let g = GibbsMeasure::new(base.clone(), 0.0, 4.0, 10, 1).unwrap();
        assert_eq!(g.normalizer().mean, 1.0);
        let x = [0.3, 0.1, -0.2];
        let h = [0.5, -1.0, 2.0];
        assert_eq!(g.beta(&h, &x), base.beta(&h, &x));
        let s = g.sample(20, 9).unwrap();
        assert_eq!(s.samples, base.sample(20, 9));
    }

    #[test]
    fn sampler_is_deterministic_and_decorrelated() {
        let g = gibbs(4);
        let a = g.sample(2000, 3).unwrap();
        let b = g.sample(2000, 3).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(a.acceptance_rate > 0.01);
        assert!(a.lag1_autocorrelation < 0.15, "{}", a.lag1_autocorrelation);
    }

    #[test]
    fn aggressive_potential_is_degenerate() {
        let g = GibbsMeasure::new(GaussianMeasure::new(vec![1e-3; 4]).unwrap(), 50.0, 6.0, 1000, 1).unwrap();
        assert!(matches!(g.sample(10, 1), Err(Error::SamplerDegenerate(_))));
    }
}
