//! Spectral Galerkin discretisation of
//! `dX = (AX + p_α(X)) dt + B dW` on `L²(0,1)` with Dirichlet `A`.
//!
//! Time stepping is a Lie splitting: an explicit reaction step evaluated on
//! a quadrature grid, followed by the exact Ornstein–Uhlenbeck step per mode,
//!
//! `X* = X + h Π p_α(X)`, `X_j ← e^{-α_j h} X*_j + b_j Z_j`,
//!
//! where `Z_j = ∫_0^h e^{-α_j(h-r)} dW_j(r)`. Each step also draws the
//! jointly Gaussian `Z'_j = ∫_0^h e^{-α_j r} dW_j(r)`, the increment of the
//! Bismut–Elworthy–Li stochastic integral along the linear decay.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::reaction::PolynomialReaction;
use crate::error::{require_positive, Error, Result};
use crate::rng;
use crate::spectral::{eigenvalue, QuadratureGrid, SpectralBasis};

/// States whose coefficient norm exceeds this are reported as blow-up.
pub const BLOW_UP_NORM: f64 = 1e6;

/// Parameters of the discretised SPDE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdeConfig {
    pub n_modes: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Diagonal of `B` in the sine basis (length `n_modes`).
    pub noise: Vec<f64>,
    pub reaction: PolynomialReaction,
    /// Yosida parameter `α` (0 = exact drift).
    pub yosida_alpha: f64,
    /// Switches the noise off (deterministic test mode).
    #[serde(default)]
    pub noiseless: bool,
}

impl SpdeConfig {
    /// `B = I`.
    pub fn new(n_modes: usize, dt: f64, horizon: f64, reaction: PolynomialReaction, yosida_alpha: f64) -> Self {
        SpdeConfig { n_modes, dt, horizon, noise: vec![1.0; n_modes], reaction, yosida_alpha, noiseless: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidParameter("n_modes must be ≥ 1".into()));
        }
        require_positive("dt", self.dt)?;
        require_positive("horizon", self.horizon)?;
        if self.noise.len() != self.n_modes {
            return Err(Error::InvalidParameter(format!(
                "noise has {} entries, expected {}",
                self.noise.len(),
                self.n_modes
            )));
        }
        if let Some(b) = self.noise.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter(format!("noise entries must be positive, got {b}")));
        }
        if !(self.yosida_alpha >= 0.0 && self.yosida_alpha.is_finite()) {
            return Err(Error::InvalidParameter("Yosida parameter must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// A validated configuration with its quadrature basis.
#[derive(Debug, Clone)]
pub struct SpdeModel {
    config: SpdeConfig,
    basis: Arc<SpectralBasis>,
    eigen: Vec<f64>,
}

impl SpdeModel {
    pub fn new(config: SpdeConfig) -> Result<Self> {
        config.validate()?;
        // Exact for the reaction and for the L⁴ moment.
        let degree = config.reaction.degree().max(3);
        let grid = QuadratureGrid::exact_for_polynomial(config.n_modes, degree);
        let basis = Arc::new(SpectralBasis::new(grid, config.n_modes)?);
        let eigen = (1..=config.n_modes).map(eigenvalue).collect();
        Ok(SpdeModel { config, basis, eigen })
    }

    pub fn config(&self) -> &SpdeConfig {
        &self.config
    }

    pub fn n_modes(&self) -> usize {
        self.config.n_modes
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    /// `α_j = π² j²` for `j = 1..n`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen
    }

    /// The same model with another nominal step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        require_positive("dt", dt)?;
        let mut m = self.clone();
        m.config.dt = dt;
        Ok(m)
    }

    /// Equal steps covering `[0, t]`: `(count, length)`.
    pub fn steps_for(&self, t: f64) -> (usize, f64) {
        let n = ((t / self.config.dt - 1e-9).ceil() as usize).max(1);
        (n, t / n as f64)
    }

    /// Writes `p_α(X(ξ_i))` into `out` for the synthesized values `vals`.
    pub(crate) fn drift_values(&self, vals: &[f64], out: &mut [f64]) -> Result<()> {
        let a = self.config.yosida_alpha;
        for (o, &v) in out.iter_mut().zip(vals) {
            *o = self.config.reaction.drift(a, v)?;
        }
        Ok(())
    }

    /// Writes `p_α'(X(ξ_i))` into `out`.
    pub(crate) fn drift_derivative_values(&self, vals: &[f64], out: &mut [f64]) -> Result<()> {
        let a = self.config.yosida_alpha;
        for (o, &v) in out.iter_mut().zip(vals) {
            *o = self.config.reaction.drift_derivative(a, v)?;
        }
        Ok(())
    }

    /// `|x|⁴_{L⁴}` from sine coefficients.
    pub fn l4_power(&self, x: &[f64]) -> f64 {
        let mut vals = vec![0.0; self.basis.grid_len()];
        self.basis.synthesize_into(x, &mut vals);
        let v4: Vec<f64> = vals.iter().map(|v| v.powi(4)).collect();
        self.basis.grid().integrate(&v4)
    }
}

/// Per-step constants for a fixed step length.
#[derive(Debug, Clone)]
pub(crate) struct Stepper<'a> {
    pub model: &'a SpdeModel,
    pub h: f64,
    /// `e^{-α_j h}`.
    pub decay: Vec<f64>,
    /// `(Z, Z')` = `(s ζ_1, c ζ_1 + d ζ_2)` per mode.
    s: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    vals: Vec<f64>,
    drift: Vec<f64>,
    proj: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a SpdeModel, h: f64) -> Self {
        let n = model.n_modes();
        let mut decay = Vec::with_capacity(n);
        let (mut s, mut c, mut d) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &a in model.eigenvalues() {
            let e = (-a * h).exp();
            let var = -(-2.0 * a * h).exp_m1() / (2.0 * a);
            let cov = h * e;
            let sd = var.sqrt();
            decay.push(e);
            s.push(sd);
            c.push(cov / sd);
            d.push((var - (cov / sd).powi(2)).max(0.0).sqrt());
        }
        let m = model.basis().grid_len();
        Stepper { model, h, decay, s, c, d, vals: vec![0.0; m], drift: vec![0.0; m], proj: vec![0.0; n] }
    }

    /// Draws `(Z, Z')` for one step (zeros in noiseless mode).
    pub fn draw(&self, r: &mut impl Rng, z: &mut [f64], z_bel: &mut [f64]) {
        if self.model.config.noiseless {
            z.iter_mut().for_each(|v| *v = 0.0);
            z_bel.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        for j in 0..z.len() {
            let a: f64 = r.sample(StandardNormal);
            let b: f64 = r.sample(StandardNormal);
            z[j] = self.s[j] * a;
            z_bel[j] = self.c[j] * a + self.d[j] * b;
        }
    }

    /// One step `x ← e^{-Ah}(x + h Π p_α(x)) + B z`.
    pub fn step(&mut self, x: &mut [f64], z: &[f64]) -> Result<()> {
        let model = self.model;
        if !model.config.reaction.is_zero() {
            model.basis().synthesize_into(x, &mut self.vals);
            model.drift_values(&self.vals, &mut self.drift)?;
            model.basis().project_into(&self.drift, &mut self.proj);
            for (xi, g) in x.iter_mut().zip(&self.proj) {
                *xi += self.h * g;
            }
        }
        let b = &model.config.noise;
        for j in 0..x.len() {
            x[j] = self.decay[j] * x[j] + b[j] * z[j];
        }
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        if !(norm_sq <= BLOW_UP_NORM * BLOW_UP_NORM) {
            return Err(Error::BlowUp(format!("state norm {} exceeds {BLOW_UP_NORM}", norm_sq.sqrt())));
        }
        Ok(())
    }

    /// Linearised step along the state `x`:
    /// `η ← e^{-Ah}(η + h Π(p_α'(x) η))`; `dp` holds `p_α'(x(ξ_i))`.
    pub fn tangent_step(&mut self, dp: &[f64], eta: &mut [f64]) {
        let model = self.model;
        if !model.config.reaction.is_zero() {
            model.basis().synthesize_into(eta, &mut self.vals);
            for (v, d) in self.vals.iter_mut().zip(dp) {
                *v *= d;
            }
            model.basis().project_into(&self.vals, &mut self.proj);
            for (e, g) in eta.iter_mut().zip(&self.proj) {
                *e += self.h * g;
            }
        }
        for (e, k) in eta.iter_mut().zip(&self.decay) {
            *e *= k;
        }
    }

    /// Adjoint of [`Self::tangent_step`]: `v ← (I + h Π p_α'(x) ·) e^{-Ah} v`.
    pub fn adjoint_step(&mut self, dp: &[f64], v: &mut [f64]) {
        for (e, k) in v.iter_mut().zip(&self.decay) {
            *e *= k;
        }
        let model = self.model;
        if !model.config.reaction.is_zero() {
            model.basis().synthesize_into(v, &mut self.vals);
            for (w, d) in self.vals.iter_mut().zip(dp) {
                *w *= d;
            }
            model.basis().project_into(&self.vals, &mut self.proj);
            for (e, g) in v.iter_mut().zip(&self.proj) {
                *e += self.h * g;
            }
        }
    }

    /// `p_α'` at the grid values of `x`.
    pub fn derivative_at(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.model.basis().synthesize_into(x, &mut self.vals);
        self.model.drift_derivative_values(&self.vals, out)
    }
}

/// A simulated path on an equidistant grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdePath {
    pub n_modes: usize,
    pub step: f64,
    /// `states[k*n .. (k+1)*n]` is `X(k h)`.
    pub states: Vec<f64>,
    /// `Z'` increments per step, `(steps) × n`.
    pub bel_increments: Vec<f64>,
}

impl SpdePath {
    pub fn steps(&self) -> usize {
        self.bel_increments.len() / self.n_modes
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n_modes..(k + 1) * self.n_modes]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.steps())
    }

    pub fn increment(&self, k: usize) -> &[f64] {
        &self.bel_increments[k * self.n_modes..(k + 1) * self.n_modes]
    }
}

/// Simulates one path from `x0` over `[0, t]`, driven by stream
/// `(seed, domain, index)`.
pub(crate) fn simulate_with(
    model: &SpdeModel,
    x0: &[f64],
    t: f64,
    seed: u64,
    domain: u64,
    index: u64,
) -> Result<SpdePath> {
    let n = model.n_modes();
    if x0.len() != n {
        return Err(Error::InvalidData(format!("initial state has {} modes, expected {n}", x0.len())));
    }
    let (steps, h) = model.steps_for(t);
    let mut stepper = Stepper::new(model, h);
    let mut r = rng::stream(seed, domain, index);
    let mut states = Vec::with_capacity((steps + 1) * n);
    let mut bel = Vec::with_capacity(steps * n);
    let mut x = x0.to_vec();
    let mut z = vec![0.0; n];
    let mut zb = vec![0.0; n];
    states.extend_from_slice(&x);
    for _ in 0..steps {
        stepper.draw(&mut r, &mut z, &mut zb);
        stepper.step(&mut x, &z)?;
        states.extend_from_slice(&x);
        bel.extend_from_slice(&zb);
    }
    Ok(SpdePath { n_modes: n, step: h, states, bel_increments: bel })
}

/// Advances `x` by `steps` steps of length `h` without storing the path.
pub(crate) fn advance(stepper: &mut Stepper<'_>, x: &mut [f64], steps: usize, r: &mut impl Rng) -> Result<()> {
    let n = x.len();
    let mut z = vec![0.0; n];
    let mut zb = vec![0.0; n];
    for _ in 0..steps {
        stepper.draw(r, &mut z, &mut zb);
        stepper.step(x, &z)?;
    }
    Ok(())
}
