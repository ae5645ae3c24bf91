//! DiPerna–Lions commutator `B_ε(u,F) = ⟨D P_ε u, F⟩ - P_ε⟨Du, F⟩`, its
//! `L¹(γ)` decay curve in `ε`, and the `V(H,γ)` quadratic form
//! `∫ φ (φ - P_ε φ)/ε dγ`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::estimators::{path_derivative, sample_invariant, InvariantSpec};
use super::model::SpdeModel;
use crate::error::{Error, Result};
use crate::fields::CylindricalField;
use crate::functions::CylindricalFunction;
use crate::rng::{self, domain};
use crate::stats::{self, Estimate};

/// Monte Carlo budget for commutator and `V`-norm estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorSpec {
    /// Time steps per unit `ε` interval: `dt = ε / steps_per_eps`.
    pub steps_per_eps: usize,
    /// Inner paths per point `x`.
    pub n_paths: usize,
    /// Outer points `x` drawn from the invariant measure.
    pub n_x: usize,
    /// Time at which `u` and `F` are frozen.
    pub field_time: f64,
}

impl Default for CommutatorSpec {
    fn default() -> Self {
        CommutatorSpec { steps_per_eps: 50, n_paths: 2000, n_x: 200, field_time: 0.0 }
    }
}

/// `∫|B_ε(u,F)| dγ` at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorEstimate {
    pub epsilon: f64,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    /// The last estimate is below the first by at least two combined
    /// standard errors.
    Decay,
    /// Every estimate is exactly zero.
    Zero,
    /// The budget does not establish the trend.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCurve {
    pub points: Vec<CommutatorEstimate>,
    pub verdict: DecayVerdict,
}

fn check_inputs(model: &SpdeModel, u: &CylindricalFunction, field: &CylindricalField, eps: f64) -> Result<()> {
    u.validate()?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1], got {eps}")));
    }
    field.require_differentiable()?;
    if !field.sup_bound().is_finite() {
        return Err(Error::InvalidParameter("the commutator needs a bounded field".into()));
    }
    let n = model.n_modes();
    if field.dim() > n || u.dimension() > n {
        return Err(Error::InvalidData(format!("u and F must live in the first {n} modes")));
    }
    Ok(())
}

/// `B_ε(u,F)(x)` by Monte Carlo over `n_paths` paths from `x`.
///
/// The first term is the Bismut–Elworthy–Li estimator in direction `F(x)`
/// with control variate `u(x)`; the second is `E⟨Du, F⟩(X_ε)`. Both use the
/// same paths.
pub fn commutator(
    model: &SpdeModel,
    u: &CylindricalFunction,
    field: &CylindricalField,
    eps: f64,
    x: &[f64],
    spec: &CommutatorSpec,
    seed: u64,
) -> Result<Estimate> {
    check_inputs(model, u, field, eps)?;
    let n = model.n_modes();
    if x.len() != n {
        return Err(Error::InvalidData(format!("x must have {n} modes")));
    }
    if spec.steps_per_eps == 0 || spec.n_paths < 2 {
        return Err(Error::InvalidParameter("need ≥ 1 step per ε and ≥ 2 paths".into()));
    }
    let m = model.with_dt(eps / spec.steps_per_eps as f64)?;
    let t = spec.field_time;
    let k_dim = field.dim();
    let mut h = vec![0.0; n];
    field.eval_with_divergence(t, x, &mut h[..k_dim]);
    let base = u.value(x);
    let vals = {
        use rayon::prelude::*;
        (0..spec.n_paths)
            .into_par_iter()
            .map(|k| {
                let d = path_derivative(&m, x, &h, eps, seed, k as u64, false)?;
                let end = d.path.last();
                let first = (u.value(end) - base) * d.stochastic_integral / eps;
                let mut f_end = vec![0.0; k_dim];
                field.eval_with_divergence(t, end, &mut f_end);
                let mut grad = vec![0.0; k_dim];
                u.gradient(end, &mut grad);
                // Coordinates beyond `F`'s dimension do not enter `⟨Du, F⟩`.
                let second: f64 = grad.iter().zip(&f_end).map(|(a, b)| a * b).sum();
                Ok(first - second)
            })
            .collect::<Result<Vec<f64>>>()?
    };
    Ok(stats::mean_stderr(&vals))
}

/// `∫|B_ε(u,F)| dγ` for each `ε` (decreasing), with points `x` from the
/// invariant measure and common random numbers across `ε`.
pub fn commutator_decay_curve(
    model: &SpdeModel,
    u: &CylindricalFunction,
    field: &CylindricalField,
    eps_grid: &[f64],
    spec: &CommutatorSpec,
    invariant: &InvariantSpec,
    seed: u64,
) -> Result<CommutatorCurve> {
    if eps_grid.len() < 2 || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("ε grid must hold ≥ 2 strictly decreasing values".into()));
    }
    let xs = invariant_points(model, spec, invariant, seed)?;
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut outer = Vec::with_capacity(xs.len());
        for (i, x) in xs.iter().enumerate() {
            let s = rng::child_seed(seed, domain::COMMUTATOR_POINTS, i as u64);
            outer.push(commutator(model, u, field, eps, x, spec, s)?.mean.abs());
        }
        let e = stats::mean_stderr(&outer);
        points.push(CommutatorEstimate { epsilon: eps, value: e.mean, stderr: e.stderr, n_samples: xs.len() });
    }
    let first = points[0];
    let last = points[points.len() - 1];
    let verdict = if points.iter().all(|p| p.value == 0.0) {
        DecayVerdict::Zero
    } else if last.value < first.value - 2.0 * first.stderr.hypot(last.stderr) {
        DecayVerdict::Decay
    } else {
        DecayVerdict::Inconclusive
    };
    Ok(CommutatorCurve { points, verdict })
}

fn invariant_points(
    model: &SpdeModel,
    spec: &CommutatorSpec,
    invariant: &InvariantSpec,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let inv = InvariantSpec { count: spec.n_x, ..*invariant };
    Ok(sample_invariant(model, &inv, rng::child_seed(seed, domain::SPDE_INVARIANT, 0))?.samples)
}

/// `∫ φ (φ - P_ε φ)/ε dγ` per `ε`, and the maximum over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VNormReport {
    pub per_eps: Vec<(f64, Estimate)>,
    pub max: f64,
}

pub fn v_norm(
    model: &SpdeModel,
    phi: &CylindricalFunction,
    eps_grid: &[f64],
    spec: &CommutatorSpec,
    invariant: &InvariantSpec,
    seed: u64,
) -> Result<VNormReport> {
    phi.validate()?;
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("ε grid must be nonempty and positive".into()));
    }
    let xs = invariant_points(model, spec, invariant, seed)?;
    let mut per_eps = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let m = model.with_dt(eps / spec.steps_per_eps as f64)?;
        let vals = {
            use rayon::prelude::*;
            xs.par_iter()
                .enumerate()
                .map(|(i, x)| {
                    let s = rng::child_seed(seed, domain::V_NORM, i as u64);
                    let p = super::estimators::semigroup(&m, phi, x, eps, spec.n_paths, s)?;
                    let f = phi.value(x);
                    Ok(f * (f - p.mean) / eps)
                })
                .collect::<Result<Vec<f64>>>()?
        };
        per_eps.push((eps, stats::mean_stderr(&vals)));
    }
    let max = per_eps.iter().map(|(_, e)| e.mean).fold(f64::NEG_INFINITY, f64::max);
    Ok(VNormReport { per_eps, max })
}

/// Writes `epsilon,value,stderr,n_samples` rows.
pub fn write_curve_csv<W: Write>(curve: &CommutatorCurve, mut out: W) -> std::io::Result<()> {
    writeln!(out, "epsilon,value,stderr,n_samples")?;
    for p in &curve.points {
        writeln!(out, "{:e},{:e},{:e},{}", p.epsilon, p.value, p.stderr, p.n_samples)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldKind;
    use crate::spde::{PolynomialReaction, SpdeConfig};
    use crate::spectral::eigenvalue;

    fn ou(n: usize) -> SpdeModel {
        SpdeModel::new(SpdeConfig::new(n, 1e-3, 1.0, PolynomialReaction::zero(), 0.0)).unwrap()
    }

    fn inv() -> InvariantSpec {
        InvariantSpec { burn_in: 600, count: 0, thinning: 50, chains: 16 }
    }

    #[test]
    fn zero_field_gives_zero_curve() {
        let m = ou(4);
        let f = CylindricalField::new(FieldKind::Zero, 2, 1.0).unwrap();
        let spec = CommutatorSpec { n_paths: 20, n_x: 4, ..Default::default() };
        let c = commutator_decay_curve(&m, &CylindricalFunction::Sine { index: 1 }, &f, &[0.5, 0.1], &spec, &inv(), 1)
            .unwrap();
        assert_eq!(c.verdict, DecayVerdict::Zero);
        let mut buf = Vec::new();
        write_curve_csv(&c, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn ou_commutator_decays() {
        let m = ou(4);
        let f = CylindricalField::new(FieldKind::Constant(vec![0.1]), 1, 1.0).unwrap();
        let u = CylindricalFunction::Sine { index: 1 };
        let spec = CommutatorSpec { n_paths: 400, n_x: 24, ..Default::default() };
        let c = commutator_decay_curve(&m, &u, &f, &[0.5, 0.1, 0.02], &spec, &inv(), 2).unwrap();
        assert_eq!(c.verdict, DecayVerdict::Decay, "{c:?}");
    }

    #[test]
    fn stderr_scales_like_inverse_root_budget() {
        let m = ou(4);
        let f = CylindricalField::new(FieldKind::Constant(vec![0.1]), 1, 1.0).unwrap();
        let u = CylindricalFunction::Sine { index: 1 };
        let x = [0.1, 0.0, 0.05, 0.0];
        let small = CommutatorSpec { n_paths: 500, ..Default::default() };
        let large = CommutatorSpec { n_paths: 2000, ..Default::default() };
        let a = commutator(&m, &u, &f, 0.2, &x, &small, 3).unwrap();
        let b = commutator(&m, &u, &f, 0.2, &x, &large, 3).unwrap();
        let ratio = a.stderr / b.stderr;
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn ou_v_norm_matches_generator_oracle() {
        let m = ou(4);
        let spec = CommutatorSpec { n_paths: 400, n_x: 400, ..Default::default() };
        let phi = CylindricalFunction::SoftClip { index: 1, scale: 100.0 };
        let grid = [0.2, 0.1, 0.05];
        let r = v_norm(&m, &phi, &grid, &spec, &inv(), 4).unwrap();
        let a1 = eigenvalue(1);
        for (eps, e) in &r.per_eps {
            let exact = -(-a1 * eps).exp_m1() / (2.0 * a1 * eps);
            assert!(e.z_score(exact).abs() < 4.0, "ε={eps}: {e:?} vs {exact}");
            assert!(e.mean > -2.0 * e.stderr);
        }
        let constant = v_norm(&m, &CylindricalFunction::Constant { value: 3.0 }, &grid, &spec, &inv(), 4).unwrap();
        assert!(constant.per_eps.iter().all(|(_, e)| e.mean == 0.0));
    }

    #[test]
    fn invalid_epsilon_rejected() {
        let m = ou(2);
        let f = CylindricalField::new(FieldKind::Zero, 1, 1.0).unwrap();
        let spec = CommutatorSpec::default();
        assert!(commutator(&m, &CylindricalFunction::Sine { index: 1 }, &f, 1.5, &[0.0, 0.0], &spec, 1).is_err());
    }
}
