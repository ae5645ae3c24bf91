//! Disintegration density `Ψ²_N(x, y)` of `γ` along `H = H_N ⊕ E_N` and the
//! slice abstraction used by the transport solver.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{GaussianMeasure, ReferenceMeasure};
use crate::error::{Error, Result};

/// A positive density on `ℝ^N` (a slice `Ψ²_N(·, y)` or one of its ladder
/// regularisations) together with its logarithmic gradient.
pub trait SliceDensity: Send + Sync {
    /// Dimension `N` of the slice.
    fn dim(&self) -> usize;

    /// Density value at `x ∈ ℝ^N`.
    fn density(&self, x: &[f64]) -> f64;

    /// `∂_i ρ / ρ` at `x` for `i = 1..=N` (zero where the density vanishes).
    fn log_gradient(&self, x: &[f64], out: &mut [f64]);

    /// True when the density is `C²`, strictly positive and bounded, so the
    /// ladder may return it untouched.
    fn smooth_positive(&self) -> bool {
        false
    }
}

/// `Ψ²_N` for a reference measure: Gaussian factor in `x` times the Gibbs
/// coupling `exp(-(α/p)∫|x + y|^p) / Z`.
#[derive(Debug, Clone)]
pub struct DisintegrationDensity {
    measure: Arc<ReferenceMeasure>,
    split: usize,
}

impl DisintegrationDensity {
    /// Splits after the first `split` modes; requires `1 ≤ split ≤ n_modes`
    /// and a positive normalizer estimate.
    pub fn new(measure: Arc<ReferenceMeasure>, split: usize) -> Result<Self> {
        if split == 0 || split > measure.n_modes() {
            return Err(Error::InvalidParameter(format!("split dimension {split} outside 1..={}", measure.n_modes())));
        }
        if !(measure.normalizer().mean > 0.0) {
            return Err(Error::SamplerDegenerate("normalizer estimate is not positive".into()));
        }
        Ok(DisintegrationDensity { measure, split })
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn measure(&self) -> &Arc<ReferenceMeasure> {
        &self.measure
    }

    /// Number of tail coordinates `n_modes - N`.
    pub fn tail_len(&self) -> usize {
        self.measure.n_modes() - self.split
    }

    /// Draws tail point `index` from the Gaussian marginal of the tail modes.
    pub fn sample_tail(&self, seed: u64, index: u64) -> Vec<f64> {
        self.measure.gaussian().draw_tail(self.split + 1, seed, index)
    }

    /// The slice `Ψ²_N(·, y)`.
    pub fn slice(&self, y: &[f64]) -> Result<ExactSlice> {
        ExactSlice::new(self.measure.clone(), self.split, y)
    }

    /// `Ψ²_N(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.slice(y)?.density(x))
    }

    /// `∂_{x_i}Ψ²_N / Ψ²_N` at `(x, y)`.
    pub fn log_gradient(&self, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        self.slice(y)?.log_gradient(x, out);
        Ok(())
    }
}

/// The exact slice `x ↦ Ψ²_N(x, y)` for a fixed tail point `y`.
#[derive(Debug, Clone)]
pub struct ExactSlice {
    measure: Arc<ReferenceMeasure>,
    split: usize,
    tail: Vec<f64>,
    /// Grid samples of `y(ξ)` (Gibbs only).
    tail_values: Vec<f64>,
    log_norm: f64,
}

impl ExactSlice {
    pub fn new(measure: Arc<ReferenceMeasure>, split: usize, tail: &[f64]) -> Result<Self> {
        let n = measure.n_modes();
        if split == 0 || split > n {
            return Err(Error::InvalidParameter(format!("split dimension {split} outside 1..={n}")));
        }
        if tail.len() != n - split {
            return Err(Error::InvalidData(format!("tail has {} coordinates, expected {}", tail.len(), n - split)));
        }
        crate::error::require_finite("tail", tail)?;
        let z = measure.normalizer().mean;
        if !(z > 0.0) {
            return Err(Error::SamplerDegenerate("normalizer estimate is not positive".into()));
        }
        let prec = measure.gaussian().precision();
        let log_norm = prec[..split].iter().map(|l| 0.5 * (l / (2.0 * PI)).ln()).sum::<f64>() - z.ln();
        let tail_values = match measure.as_ref() {
            ReferenceMeasure::Gaussian(_) => Vec::new(),
            ReferenceMeasure::Gibbs(g) => {
                let mut full = vec![0.0; n];
                full[split..].copy_from_slice(tail);
                let mut v = vec![0.0; g.basis().grid_len()];
                g.basis().synthesize_into(&full, &mut v);
                v
            }
        };
        Ok(ExactSlice { measure, split, tail: tail.to_vec(), tail_values, log_norm })
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    pub fn measure(&self) -> &Arc<ReferenceMeasure> {
        &self.measure
    }

    fn gaussian(&self) -> &GaussianMeasure {
        self.measure.gaussian()
    }

    /// Grid samples of `(x + y)(ξ)`.
    fn full_values(&self, x: &[f64], basis: &crate::spectral::SpectralBasis) -> Vec<f64> {
        let mut v = vec![0.0; basis.grid_len()];
        basis.synthesize_into(&x[..self.split], &mut v);
        for (a, b) in v.iter_mut().zip(&self.tail_values) {
            *a += b;
        }
        v
    }

    /// `ln Ψ²_N(x, y)`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let prec = self.gaussian().precision();
        let quad: f64 = x[..self.split].iter().zip(prec).map(|(a, l)| 0.5 * l * a * a).sum();
        let pot = match self.measure.as_ref() {
            ReferenceMeasure::Gaussian(_) => 0.0,
            ReferenceMeasure::Gibbs(g) => {
                if g.alpha() == 0.0 {
                    0.0
                } else {
                    g.potential_from_values(&self.full_values(x, g.basis()))
                }
            }
        };
        self.log_norm - quad - pot
    }

    /// Standard deviation of coordinate `i` under the Gaussian factor.
    pub fn gaussian_scale(&self, i: usize) -> f64 {
        self.gaussian().variance(i).sqrt()
    }
}

impl SliceDensity for ExactSlice {
    fn dim(&self) -> usize {
        self.split
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    fn log_gradient(&self, x: &[f64], out: &mut [f64]) {
        let prec = self.gaussian().precision();
        match self.measure.as_ref() {
            ReferenceMeasure::Gibbs(g) if g.alpha() > 0.0 => {
                g.nonlinear_gradient_from_values(&self.full_values(x, g.basis()), &mut out[..self.split]);
                for i in 0..self.split {
                    out[i] = -prec[i] * x[i] - out[i];
                }
            }
            _ => {
                for i in 0..self.split {
                    out[i] = -prec[i] * x[i];
                }
            }
        }
    }

    fn smooth_positive(&self) -> bool {
        true
    }
}

/// A constant density on `ℝ^N`; used to exercise the ladder.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDensity {
    pub dim: usize,
    pub value: f64,
}

impl SliceDensity for ConstantDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn density(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn log_gradient(&self, _x: &[f64], out: &mut [f64]) {
        out[..self.dim].iter_mut().for_each(|o| *o = 0.0);
    }

    fn smooth_positive(&self) -> bool {
        self.value > 0.0
    }
}
