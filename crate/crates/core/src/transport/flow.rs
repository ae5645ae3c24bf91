//! Characteristic flows `Φ_{s,t}` of a cylindrical field.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::fields::CylindricalField;
use crate::spectral::SpectralCoords;

/// Fixed-step explicit Runge–Kutta scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge–Kutta.
    #[default]
    Rk4,
    /// Explicit midpoint rule.
    Rk2,
}

/// How the Feynman–Kac exponent `∫ D*F` is accumulated along a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExponentRule {
    /// Integrated as an extra state component with the flow's own scheme.
    #[default]
    Augmented,
    /// Trapezoid rule on the flow nodes.
    Trapezoid,
}

/// Step control for characteristic flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub integrator: Integrator,
    pub exponent: ExponentRule,
    /// Nominal step; intervals of length `L` use `ceil(L/dt)` equal steps.
    pub dt: f64,
}

impl FlowConfig {
    pub fn new(integrator: Integrator, dt: f64) -> Result<Self> {
        require_positive("dt", dt)?;
        Ok(FlowConfig { integrator, exponent: ExponentRule::Augmented, dt })
    }

    pub fn rk4(dt: f64) -> Result<Self> {
        Self::new(Integrator::Rk4, dt)
    }

    pub fn with_exponent(mut self, rule: ExponentRule) -> Self {
        self.exponent = rule;
        self
    }

    /// Number of equal steps used for an interval of the given length.
    pub fn steps_for(&self, length: f64) -> usize {
        ((length.abs() / self.dt - 1e-9).ceil() as usize).max(1)
    }

    /// Fails unless every time is an integer multiple of `dt` (to 1e-12
    /// relative), which lets single sweeps land exactly on each time.
    pub fn check_divides(&self, times: &[f64]) -> Result<()> {
        for &t in times {
            let k = (t / self.dt).round();
            if (k * self.dt - t).abs() > 1e-12 * t.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!("dt = {} does not divide evaluation time {t}", self.dt)));
            }
        }
        Ok(())
    }
}

/// One explicit step of `y' = g(τ, y)` from `τ` with step `h`.
pub(crate) fn rk_step(
    integrator: Integrator,
    tau: f64,
    h: f64,
    y: &mut [f64],
    work: &mut RkWork,
    g: &mut dyn FnMut(f64, &[f64], &mut [f64]),
) {
    let n = y.len();
    work.resize(n);
    let RkWork { k1, k2, k3, k4, tmp } = work;
    match integrator {
        Integrator::Rk2 => {
            g(tau, y, k1);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            g(tau + 0.5 * h, tmp, k2);
            for i in 0..n {
                y[i] += h * k2[i];
            }
        }
        Integrator::Rk4 => {
            g(tau, y, k1);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            g(tau + 0.5 * h, tmp, k2);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            g(tau + 0.5 * h, tmp, k3);
            for i in 0..n {
                tmp[i] = y[i] + h * k3[i];
            }
            g(tau + h, tmp, k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
}

/// Scratch buffers for [`rk_step`].
#[derive(Debug, Default, Clone)]
pub(crate) struct RkWork {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl RkWork {
    fn resize(&mut self, n: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(n, 0.0);
        }
    }
}

/// `Φ_{s,t}(x)`: the solution at time `t` of `X' = F(r, X)` with `X(s) = x`.
///
/// Backward flows (`t < s`) integrate the reversed field. Coordinates beyond
/// the field's cylinder dimension are left unchanged.
pub fn flow(field: &CylindricalField, s: f64, t: f64, x: &SpectralCoords, cfg: &FlowConfig) -> Result<SpectralCoords> {
    field.check_time(s)?;
    field.check_time(t)?;
    let n = field.dim();
    if x.n_modes() < n {
        return Err(Error::InvalidData(format!("point has {} modes, field needs {n}", x.n_modes())));
    }
    let mut out = x.coeffs().to_vec();
    if s == t {
        return SpectralCoords::new(out);
    }
    let steps = cfg.steps_for(t - s);
    let h = (t - s) / steps as f64;
    let mut y = out[..n].to_vec();
    let mut work = RkWork::default();
    let mut rhs = |r: f64, z: &[f64], o: &mut [f64]| {
        field.eval_with_divergence(r, z, o);
    };
    for k in 0..steps {
        rk_step(cfg.integrator, s + k as f64 * h, h, &mut y, &mut work, &mut rhs);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp(format!("flow from s = {s} to t = {t} left the finite range")));
    }
    out[..n].copy_from_slice(&y);
    SpectralCoords::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldKind;

    fn linear() -> CylindricalField {
        CylindricalField::new(FieldKind::Linear(vec![-1.0, 2.0]), 2, 1.0).unwrap()
    }

    #[test]
    fn linear_flow_matches_matrix_exponential() {
        let cfg = FlowConfig::rk4(1e-3).unwrap();
        let x = SpectralCoords::new(vec![0.7, -0.3, 5.0]).unwrap();
        let y = flow(&linear(), 0.0, 1.0, &x, &cfg).unwrap();
        assert!((y.coeffs()[0] - 0.7 * (-1.0f64).exp()).abs() < 1e-8);
        assert!((y.coeffs()[1] + 0.3 * 2.0f64.exp()).abs() < 1e-8);
        assert_eq!(y.coeffs()[2], 5.0);
    }

    #[test]
    fn rk2_is_second_order() {
        let x = SpectralCoords::new(vec![1.0, 1.0]).unwrap();
        let err = |dt: f64| {
            let cfg = FlowConfig::new(Integrator::Rk2, dt).unwrap();
            let y = flow(&linear(), 0.0, 1.0, &x, &cfg).unwrap();
            (y.coeffs()[1] - 2.0f64.exp()).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn flow_composes_and_inverts() {
        let f = CylindricalField::new(FieldKind::Swirl { scale: 1.0 }, 2, 1.0).unwrap();
        let cfg = FlowConfig::rk4(1e-3).unwrap();
        let x = SpectralCoords::new(vec![0.3, -0.2]).unwrap();
        let a = flow(&f, 0.0, 1.0, &x, &cfg).unwrap();
        let b = flow(&f, 0.5, 1.0, &flow(&f, 0.0, 0.5, &x, &cfg).unwrap(), &cfg).unwrap();
        let back = flow(&f, 1.0, 0.0, &a, &cfg).unwrap();
        for i in 0..2 {
            assert!((a.coeffs()[i] - b.coeffs()[i]).abs() < 1e-10);
            assert!((back.coeffs()[i] - x.coeffs()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn divisibility_check() {
        let cfg = FlowConfig::rk4(1e-3).unwrap();
        assert!(cfg.check_divides(&[0.0, 0.25, 1.0]).is_ok());
        assert!(cfg.check_divides(&[0.00015]).is_err());
        assert_eq!(cfg.steps_for(0.5), 500);
        assert_eq!(cfg.steps_for(0.5005), 501);
    }

    #[test]
    fn flow_outside_horizon_rejected() {
        let cfg = FlowConfig::rk4(1e-3).unwrap();
        let x = SpectralCoords::new(vec![0.0, 0.0]).unwrap();
        assert!(flow(&linear(), 0.0, 1.5, &x, &cfg).is_err());
    }
}
