//! Centered Gaussian measure with diagonal covariance in the eigenbasis.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::spectral::SpectralCoords;

/// `N(0, Q)` with `Q e_j = λ_j^{-1} e_j`; `λ_j` are the precision eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    precision: Vec<f64>,
}

impl GaussianMeasure {
    /// General diagonal Gaussian; every precision must be positive and finite.
    pub fn new(precision: Vec<f64>) -> Result<Self> {
        if precision.is_empty() {
            return Err(Error::InvalidParameter("Gaussian needs at least one mode".into()));
        }
        if let Some(j) = precision.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidParameter(format!("precision of mode {} must be positive", j + 1)));
        }
        Ok(GaussianMeasure { precision })
    }

    /// `N(0, ½(-A)^{-1})`: `λ_j = 2π² j²`, the invariant measure of `dX = AX dt + dW`.
    pub fn dirichlet(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("n_modes must be ≥ 1".into()));
        }
        Self::new((1..=n_modes).map(|j| 2.0 * PI * PI * (j * j) as f64).collect())
    }

    pub fn n_modes(&self) -> usize {
        self.precision.len()
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }

    /// Variance `1/λ_j` of mode `j` (1-based).
    pub fn variance(&self, j: usize) -> f64 {
        1.0 / self.precision[j - 1]
    }

    /// Draws sample `index` of the stream under `seed` into `out`.
    pub fn draw_into(&self, seed: u64, stream_domain: u64, index: u64, out: &mut [f64]) {
        let mut r = rng::stream(seed, stream_domain, index);
        for (o, l) in out.iter_mut().zip(&self.precision) {
            let z: f64 = r.sample(StandardNormal);
            *o = z / l.sqrt();
        }
    }

    /// Draws the modes `first..=n_modes` only (1-based `first`); used for tails.
    pub fn draw_tail(&self, first: usize, seed: u64, index: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, domain::TAIL, index);
        self.precision[first - 1..]
            .iter()
            .map(|l| {
                let z: f64 = r.sample(StandardNormal);
                z / l.sqrt()
            })
            .collect()
    }

    /// `count` independent draws; sample `k` uses its own stream, so the
    /// output is identical for any thread count.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<SpectralCoords> {
        (0..count)
            .into_par_iter()
            .map(|k| {
                let mut c = vec![0.0; self.n_modes()];
                self.draw_into(seed, domain::GAUSSIAN_SAMPLES, k as u64, &mut c);
                SpectralCoords::new(c).expect("finite draws")
            })
            .collect()
    }

    /// `β_h(x) = -Σ_i h_i λ_i x_i`.
    pub fn beta(&self, h: &[f64], x: &[f64]) -> f64 {
        h.iter().zip(x).zip(&self.precision).map(|((a, b), l)| -a * l * b).sum()
    }
}
