//! Monte Carlo checks of Fomin differentiability: the integration-by-parts
//! identity and exponential integrability of `β_h`.

use serde::Serialize;

use super::ReferenceMeasure;
use crate::error::{require_positive, Error, Result};
use crate::functions::CylindricalFunction;
use crate::spectral::SpectralCoords;
use crate::stats::{self, Estimate};

/// Jackknife blocks used for Markov chain output.
const JACKKNIFE_BLOCKS: usize = 100;

fn beta_direction(measure: &ReferenceMeasure, x: &SpectralCoords, h: usize) -> f64 {
    let mut b = vec![0.0; h];
    measure.beta_basis(x.coeffs(), &mut b);
    b[h - 1]
}

fn check_direction(measure: &ReferenceMeasure, h: usize) -> Result<()> {
    if h == 0 || h > measure.n_modes() {
        return Err(Error::InvalidIndex(format!("direction e_{h} outside 1..={}", measure.n_modes())));
    }
    Ok(())
}

/// Estimates `∫∂_h u dγ + ∫u β_h dγ` (zero under Fomin differentiability)
/// with a blocked jackknife standard error.
pub fn ibp_residual(
    measure: &ReferenceMeasure,
    u: &CylindricalFunction,
    h: usize,
    count: usize,
    seed: u64,
) -> Result<Estimate> {
    check_direction(measure, h)?;
    u.validate()?;
    if count < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let samples = measure.sample(count, seed)?;
    let vals: Vec<f64> = samples
        .iter()
        .map(|x| u.partial(x.coeffs(), h) + u.value(x.coeffs()) * beta_direction(measure, x, h))
        .collect();
    Ok(stats::block_jackknife_mean(&vals, JACKKNIFE_BLOCKS))
}

/// Estimate of `∫e^{c|β_h|}dγ` with a half-sample stability check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpIntegrability {
    pub estimate: Estimate,
    pub half_sample: f64,
    /// Set when the full-sample estimate is at least twice the half-sample
    /// one, the signature of a heavy (divergent) tail.
    pub divergence_warning: bool,
}

pub fn exp_integrability(
    measure: &ReferenceMeasure,
    h: usize,
    c: f64,
    count: usize,
    seed: u64,
) -> Result<ExpIntegrability> {
    check_direction(measure, h)?;
    require_positive("c", c)?;
    if count < 4 {
        return Err(Error::InvalidParameter("need at least four samples".into()));
    }
    let samples = measure.sample(count, seed)?;
    let vals: Vec<f64> = samples.iter().map(|x| (c * beta_direction(measure, x, h).abs()).exp()).collect();
    let estimate = stats::block_jackknife_mean(&vals, JACKKNIFE_BLOCKS);
    let half_sample = stats::mean(&vals[..count / 2]);
    Ok(ExpIntegrability { estimate, half_sample, divergence_warning: estimate.mean >= 2.0 * half_sample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{GaussianMeasure, GibbsMeasure};
    use std::f64::consts::PI;

    #[test]
    fn constant_function_gaussian() {
        let m = ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(3).unwrap());
        let e = ibp_residual(&m, &CylindricalFunction::Constant { value: 1.0 }, 2, 20_000, 1).unwrap();
        assert!(e.mean.abs() <= 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn damped_coordinate_gaussian() {
        let m = ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(3).unwrap());
        let e = ibp_residual(&m, &CylindricalFunction::DampedCoordinate { index: 1 }, 1, 100_000, 2).unwrap();
        assert!(e.mean.abs() <= 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn wrong_integrand_is_detected() {
        // Dropping the β term leaves ∫∂_1 u dγ ≠ 0, which must fail the contract.
        let m = ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(2).unwrap());
        let u = CylindricalFunction::DampedCoordinate { index: 1 };
        let s = m.sample(20_000, 3).unwrap();
        let v: Vec<f64> = s.iter().map(|x| u.partial(x.coeffs(), 1)).collect();
        let e = stats::mean_stderr(&v);
        assert!(e.mean.abs() > 4.0 * e.stderr);
    }

    #[test]
    fn gibbs_product_function() {
        let m = ReferenceMeasure::Gibbs(
            GibbsMeasure::new(GaussianMeasure::dirichlet(4).unwrap(), 1.0, 4.0, 20_000, 1).unwrap(),
        );
        let u = CylindricalFunction::GaussianProduct { gauss: 1, linear: 2 };
        let e = ibp_residual(&m, &u, 2, 50_000, 4).unwrap();
        assert!(e.mean.abs() <= 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn folded_normal_oracle() {
        // E exp(c λ |x|) with x ~ N(0, 1/λ): 2 exp(c²λ/2) Φ(c√λ).
        let m = ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(2).unwrap());
        let lam = 2.0 * PI * PI;
        let c = 0.01;
        let s = c * lam.sqrt();
        let phi = 0.5 * statrs::function::erf::erfc(-s / 2f64.sqrt());
        let exact = 2.0 * (0.5 * s * s).exp() * phi;
        let r = exp_integrability(&m, 1, c, 100_000, 7).unwrap();
        assert!(r.estimate.z_score(exact) < 3.0, "{:?} vs {exact}", r.estimate);
        assert!(!r.divergence_warning);
        let tiny = exp_integrability(&m, 1, 1e-9, 1000, 7).unwrap();
        assert!((tiny.estimate.mean - 1.0).abs() < 1e-6);
    }

    #[test]
    fn monotone_in_c() {
        let m = ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(2).unwrap());
        let v: Vec<f64> =
            [0.001, 0.005, 0.01].iter().map(|&c| exp_integrability(&m, 1, c, 5000, 3).unwrap().estimate.mean).collect();
        assert!(v[0] < v[1] && v[1] < v[2]);
    }

    #[test]
    fn bad_direction_rejected() {
        let m = ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(2).unwrap());
        assert!(matches!(
            ibp_residual(&m, &CylindricalFunction::Constant { value: 1.0 }, 3, 10, 1),
            Err(Error::InvalidIndex(_))
        ));
    }
}
