//! Reference measures `γ` on the truncated space, their logarithmic
//! derivatives `β_h`, the finite-dimensional disintegration density `Ψ²_N`
//! and its clip/mollify ladder.

mod checks;
mod density;
mod gaussian;
mod gibbs;
mod ladder;

use std::io::Write;

pub use checks::{exp_integrability, ibp_residual, ExpIntegrability};
pub use density::{ConstantDensity, DisintegrationDensity, ExactSlice, SliceDensity};
pub use gaussian::GaussianMeasure;
pub use gibbs::{GibbsMeasure, GibbsSample};
pub use ladder::{
    jensen_chain, ClippedDensity, JensenRecord, LadderDensity, LadderMode, LadderSpec, MollifierKernel,
    MC_CONVOLUTION_DRAWS, QUADRATURE_NODES_PER_AXIS,
};

use crate::error::Result;
use crate::spectral::SpectralCoords;
use crate::stats::Estimate;

/// A Gaussian or Gibbs reference measure on the truncated space.
#[derive(Debug, Clone)]
pub enum ReferenceMeasure {
    Gaussian(GaussianMeasure),
    Gibbs(GibbsMeasure),
}

impl ReferenceMeasure {
    pub fn n_modes(&self) -> usize {
        self.gaussian().n_modes()
    }

    /// The Gaussian part (the measure itself, or the Gibbs base).
    pub fn gaussian(&self) -> &GaussianMeasure {
        match self {
            ReferenceMeasure::Gaussian(g) => g,
            ReferenceMeasure::Gibbs(g) => g.base(),
        }
    }

    /// Normalizing constant relative to the Gaussian part (exactly 1 for Gaussians).
    pub fn normalizer(&self) -> Estimate {
        match self {
            ReferenceMeasure::Gaussian(_) => Estimate::exact(1.0),
            ReferenceMeasure::Gibbs(g) => g.normalizer(),
        }
    }

    /// `(α/p)∫|x|^p`, zero for Gaussians.
    pub fn potential(&self, x: &[f64]) -> f64 {
        match self {
            ReferenceMeasure::Gaussian(_) => 0.0,
            ReferenceMeasure::Gibbs(g) => g.potential(x),
        }
    }

    /// `β_{e_i}(x)` for `i = 1..=out.len()`.
    pub fn beta_basis(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ReferenceMeasure::Gaussian(g) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = -g.precision()[i] * x.get(i).copied().unwrap_or(0.0);
                }
            }
            ReferenceMeasure::Gibbs(g) => g.beta_basis(x, out),
        }
    }

    /// `β_h(x)` for a direction `h` in the truncated space.
    pub fn beta(&self, h: &SpectralCoords, x: &SpectralCoords) -> f64 {
        match self {
            ReferenceMeasure::Gaussian(g) => g.beta(h.coeffs(), x.coeffs()),
            ReferenceMeasure::Gibbs(g) => g.beta(h.coeffs(), x.coeffs()),
        }
    }

    /// Draws `count` samples (exact for Gaussians, Metropolis for Gibbs).
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<SpectralCoords>> {
        match self {
            ReferenceMeasure::Gaussian(g) => Ok(g.sample(count, seed)),
            ReferenceMeasure::Gibbs(g) => Ok(g.sample(count, seed)?.samples),
        }
    }
}

/// Writes samples as CSV: one row per sample, columns `mode_1..mode_N`.
pub fn write_samples_csv<W: Write>(samples: &[SpectralCoords], mut out: W) -> std::io::Result<()> {
    let n = samples.first().map_or(0, |s| s.n_modes());
    let header: Vec<String> = (1..=n).map(|j| format!("mode_{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for s in samples {
        let row: Vec<String> = s.coeffs().iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
