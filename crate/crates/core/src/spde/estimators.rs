//! Path ensembles, invariant-measure sampling, derivative flows, and
//! Monte Carlo estimators of `P_t φ`, `D P_t φ` (Bismut–Elworthy–Li and
//! finite differences) and of the commutation identity
//! `⟨P_t Dφ, h⟩ = ⟨D P_t φ, h⟩ - ∫_0^t P_{t-s}[⟨(A + Dp_α)h, D P_s φ⟩] ds`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{advance, simulate_with, SpdeModel, SpdePath, Stepper};
use crate::error::{Error, Result};
use crate::functions::CylindricalFunction;
use crate::rng::{self, domain};
use crate::stats::{self, Estimate};

/// Slack allowed in the contraction `|η(t)| ≤ |h|`.
pub const CONTRACTION_SLACK: f64 = 1e-8;

/// Simulates one path from `x0` over `[0, T]`.
pub fn simulate(model: &SpdeModel, x0: &[f64], seed: u64) -> Result<SpdePath> {
    simulate_with(model, x0, model.config().horizon, seed, domain::SPDE_PATH, 0)
}

/// Independent paths from a common initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub paths: Vec<SpdePath>,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
}

/// `count` paths over `[0, T]`; path `k` uses stream `k` under `seed`.
pub fn simulate_ensemble(model: &SpdeModel, x0: &[f64], count: usize, seed: u64) -> Result<PathEnsemble> {
    let t = model.config().horizon;
    let paths = (0..count)
        .into_par_iter()
        .map(|k| simulate_with(model, x0, t, seed, domain::SPDE_PATH, k as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble { paths, seed, dt: model.steps_for(t).1, horizon: t })
}

/// `η^h` along a frozen path (one state per grid time), checking
/// `|η(t)| ≤ |h|` at every step.
pub fn derivative_flow(model: &SpdeModel, path: &SpdePath, h: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = model.n_modes();
    if h.len() != n || path.n_modes != n {
        return Err(Error::InvalidData("direction, path and model must share n_modes".into()));
    }
    let bound = norm(h) * (1.0 + CONTRACTION_SLACK);
    let mut stepper = Stepper::new(model, path.step);
    let mut dp = vec![0.0; model.basis().grid_len()];
    let mut eta = h.to_vec();
    let mut out = Vec::with_capacity(path.steps() + 1);
    out.push(eta.clone());
    for k in 0..path.steps() {
        stepper.derivative_at(path.state(k), &mut dp)?;
        stepper.tangent_step(&dp, &mut eta);
        let size = norm(&eta);
        if size > bound {
            return Err(Error::SolverFailure(format!(
                "derivative flow lost contraction at step {}: |η| = {size} > |h| = {}",
                k + 1,
                norm(h)
            )));
        }
        out.push(eta.clone());
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Burn-in, thinning and chain layout for invariant-measure sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSpec {
    /// Steps discarded at the start of each chain (`burn_in·dt ≥ 5/α_1`).
    pub burn_in: usize,
    pub count: usize,
    /// Steps between retained states within a chain.
    pub thinning: usize,
    /// Independent chains started from `0`.
    pub chains: usize,
}

/// Empirical `L^{2N}` moments, `N ∈ {1, 2}`, and a stationarity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `∫|x|²_{L²} dγ`.
    pub l2: Estimate,
    /// `∫|x|⁴_{L⁴} dγ`.
    pub l4: Estimate,
    /// `|x|²` means over the first and second halves of each chain.
    pub first_half: Estimate,
    pub second_half: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSample {
    pub samples: Vec<Vec<f64>>,
    pub moments: MomentReport,
}

/// Approximate draws from the invariant measure of the discretised SPDE.
///
/// Fails with a not-converged error when the first- and second-half means of
/// `|x|²` differ by more than three combined standard errors.
pub fn sample_invariant(model: &SpdeModel, spec: &InvariantSpec, seed: u64) -> Result<InvariantSample> {
    let dt = model.config().dt;
    let relax = 5.0 / model.eigenvalues()[0];
    if (spec.burn_in as f64) * dt < relax * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "burn-in {}·dt = {} is shorter than 5/α_1 = {relax}",
            spec.burn_in,
            spec.burn_in as f64 * dt
        )));
    }
    if spec.count == 0 || spec.chains == 0 || spec.thinning == 0 {
        return Err(Error::InvalidParameter("count, chains and thinning must be ≥ 1".into()));
    }
    let chains = spec.chains.min(spec.count);
    let per_chain = spec.count.div_ceil(chains);
    let n = model.n_modes();
    let runs: Vec<Result<Vec<Vec<f64>>>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, domain::SPDE_INVARIANT, c as u64);
            let mut stepper = Stepper::new(model, dt);
            let mut x = vec![0.0; n];
            advance(&mut stepper, &mut x, spec.burn_in, &mut r)?;
            let mut out = Vec::with_capacity(per_chain);
            for _ in 0..per_chain {
                advance(&mut stepper, &mut x, spec.thinning, &mut r)?;
                out.push(x.clone());
            }
            Ok(out)
        })
        .collect();
    let mut chains_out = Vec::with_capacity(chains);
    for r in runs {
        chains_out.push(r?);
    }
    let mut samples = Vec::with_capacity(spec.count);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    'outer: for k in 0..per_chain {
        for chain in &chains_out {
            if samples.len() == spec.count {
                break 'outer;
            }
            let x = chain[k].clone();
            let sq: f64 = x.iter().map(|a| a * a).sum();
            // Halves by position within the chain (alternating for single draws).
            let early = if per_chain == 1 { samples.len() % 2 == 0 } else { 2 * k < per_chain };
            if early {
                first.push(sq);
            } else {
                second.push(sq);
            }
            samples.push(x);
        }
    }
    let l2_vals: Vec<f64> = samples.iter().map(|x| x.iter().map(|a| a * a).sum()).collect();
    let l4_vals: Vec<f64> = samples.iter().map(|x| model.l4_power(x)).collect();
    let moments = MomentReport {
        l2: stats::mean_stderr(&l2_vals),
        l4: stats::mean_stderr(&l4_vals),
        first_half: stats::mean_stderr(&first),
        second_half: stats::mean_stderr(&second),
    };
    if first.len() >= 2 && second.len() >= 2 {
        let gap = (moments.first_half.mean - moments.second_half.mean).abs();
        let se = moments.first_half.stderr.hypot(moments.second_half.stderr);
        if gap > 3.0 * se {
            return Err(Error::NotConverged(format!(
                "first/second half |x|² means differ by {gap:.3e} (> 3·{se:.3e}); lengthen the burn-in"
            )));
        }
    }
    Ok(InvariantSample { samples, moments })
}

/// Runs `f(k)` for paths `k = 0..n` in parallel and averages.
fn mc_mean(n: usize, f: impl Fn(u64) -> Result<f64> + Sync + Send) -> Result<Estimate> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two Monte Carlo paths".into()));
    }
    let vals = (0..n).into_par_iter().map(|k| f(k as u64)).collect::<Result<Vec<f64>>>()?;
    Ok(stats::mean_stderr(&vals))
}

/// `P_t φ(x) = E φ(X(t,x))`.
pub fn semigroup(
    model: &SpdeModel,
    phi: &CylindricalFunction,
    x: &[f64],
    t: f64,
    n_mc: usize,
    seed: u64,
) -> Result<Estimate> {
    if t == 0.0 {
        return Ok(Estimate::exact(phi.value(x)));
    }
    let (steps, h) = model.steps_for(t);
    mc_mean(n_mc, |k| {
        let mut r = rng::stream(seed, domain::SPDE_PATH, k);
        let mut stepper = Stepper::new(model, h);
        let mut y = x.to_vec();
        advance(&mut stepper, &mut y, steps, &mut r)?;
        Ok(phi.value(&y))
    })
}

/// A gradient estimate with a reliability flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BelEstimate {
    pub estimate: Estimate,
    /// Set when the standard error exceeds half the magnitude of the mean.
    pub inconclusive: bool,
}

/// Per-path ingredients shared by the gradient estimators.
pub(crate) struct PathDerivative {
    pub path: SpdePath,
    /// `∫_0^t ⟨B^{-1} η^h, dW⟩` on the grid.
    pub stochastic_integral: f64,
    /// `p_α'` at the grid values of every non-final state.
    pub dp: Vec<Vec<f64>>,
}

pub(crate) fn path_derivative(
    model: &SpdeModel,
    x: &[f64],
    h: &[f64],
    t: f64,
    seed: u64,
    index: u64,
    keep_dp: bool,
) -> Result<PathDerivative> {
    let path = simulate_with(model, x, t, seed, domain::SPDE_PATH, index)?;
    let mut stepper = Stepper::new(model, path.step);
    let b = &model.config().noise;
    let mut eta = h.to_vec();
    let mut dp = vec![0.0; model.basis().grid_len()];
    let mut kept = Vec::new();
    let mut terms = Vec::with_capacity(path.steps());
    for k in 0..path.steps() {
        let zb = path.increment(k);
        terms.push(eta.iter().zip(zb).zip(b).map(|((e, z), bj)| e * z / bj).sum::<f64>());
        if !model.config().reaction.is_zero() {
            stepper.derivative_at(path.state(k), &mut dp)?;
        }
        stepper.tangent_step(&dp, &mut eta);
        if keep_dp {
            kept.push(dp.clone());
        }
    }
    Ok(PathDerivative { path, stochastic_integral: stats::sum(&terms), dp: kept })
}

fn check_direction(model: &SpdeModel, x: &[f64], h: &[f64], t: f64) -> Result<()> {
    let n = model.n_modes();
    if x.len() != n || h.len() != n {
        return Err(Error::InvalidData(format!("x and h must have {n} modes")));
    }
    crate::error::require_positive("t", t)?;
    if model.config().noiseless {
        return Err(Error::InvalidParameter("gradient formulas need nondegenerate noise".into()));
    }
    Ok(())
}

/// `⟨D P_t φ(x), h⟩ = t^{-1} E[φ(X_t) ∫_0^t ⟨B^{-1}η^h, dW⟩]`, with `φ(x)`
/// subtracted as a control variate (the stochastic integral has mean zero).
pub fn bel_gradient(
    model: &SpdeModel,
    phi: &CylindricalFunction,
    x: &[f64],
    h: &[f64],
    t: f64,
    n_mc: usize,
    seed: u64,
) -> Result<BelEstimate> {
    check_direction(model, x, h, t)?;
    let base = phi.value(x);
    let estimate = mc_mean(n_mc, |k| {
        let d = path_derivative(model, x, h, t, seed, k, false)?;
        Ok((phi.value(d.path.last()) - base) * d.stochastic_integral / t)
    })?;
    Ok(BelEstimate { estimate, inconclusive: estimate.stderr > 0.5 * estimate.mean.abs() })
}

/// Central finite difference of `P_t φ` in direction `h` with common
/// random numbers.
pub fn fd_gradient(
    model: &SpdeModel,
    phi: &CylindricalFunction,
    x: &[f64],
    h: &[f64],
    t: f64,
    n_mc: usize,
    seed: u64,
    step: f64,
) -> Result<Estimate> {
    crate::error::require_positive("step", step)?;
    let plus: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + step * b).collect();
    let minus: Vec<f64> = x.iter().zip(h).map(|(a, b)| a - step * b).collect();
    let (steps, dt) = model.steps_for(t);
    mc_mean(n_mc, |k| {
        let mut ends = [plus.clone(), minus.clone()];
        for y in ends.iter_mut() {
            let mut r = rng::stream(seed, domain::SPDE_PATH, k);
            let mut stepper = Stepper::new(model, dt);
            advance(&mut stepper, y, steps, &mut r)?;
        }
        Ok((phi.value(&ends[0]) - phi.value(&ends[1])) / (2.0 * step))
    })
}

/// Residual of the commutation identity at `(x, h, t)`:
/// `⟨P_t Dφ, h⟩ - ⟨D P_t φ, h⟩ + ∫_0^t P_{t-s}[⟨(A + Dp_α)h, D P_s φ⟩] ds`.
///
/// `⟨D P_t φ, h⟩` uses the Bismut–Elworthy–Li estimator; the integral term
/// is accumulated pathwise with an adjoint sweep and the scheme's own
/// increments `S_n h - h` (the discrete `(A + Dp_α(X_n)) h dt`).
pub fn identity_residual(
    model: &SpdeModel,
    phi: &CylindricalFunction,
    x: &[f64],
    h: &[f64],
    t: f64,
    n_mc: usize,
    seed: u64,
) -> Result<Estimate> {
    check_direction(model, x, h, t)?;
    let n = model.n_modes();
    let base = phi.value(x);
    mc_mean(n_mc, |k| {
        let d = path_derivative(model, x, h, t, seed, k, true)?;
        let end = d.path.last();
        let mut v = vec![0.0; n];
        phi.gradient(end, &mut v);
        let lhs = dot(&v, h);
        let bel = (phi.value(end) - base) * d.stochastic_integral / t;
        let mut stepper = Stepper::new(model, d.path.step);
        let mut terms = Vec::with_capacity(d.dp.len());
        let mut inc = vec![0.0; n];
        for dp in d.dp.iter().rev() {
            inc.copy_from_slice(h);
            stepper.tangent_step(dp, &mut inc);
            for (a, b) in inc.iter_mut().zip(h) {
                *a -= b;
            }
            terms.push(dot(&v, &inc));
            stepper.adjoint_step(dp, &mut v);
        }
        Ok(lhs - bel + stats::sum(&terms))
    })
}
