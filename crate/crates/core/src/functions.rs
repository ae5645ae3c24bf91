//! Smooth cylindrical scalar functions used as test functions `u`, `φ`.
//!
//! Each function depends on finitely many coordinates and exposes its value
//! and gradient analytically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded (or integrable) `C¹` function of the first few coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CylindricalFunction {
    /// `u ≡ c`.
    Constant { value: f64 },
    /// `u = x_i exp(-x_i²/2)`: a coordinate damped by a smooth cutoff.
    DampedCoordinate { index: usize },
    /// `u = exp(-x_i²) x_j`.
    GaussianProduct { gauss: usize, linear: usize },
    /// `u = sin(x_i)`.
    Sine { index: usize },
    /// `u = exp(-|x - c|²/2) (1 + x_1)` over the coordinates of `center`.
    TiltedGaussian { center: Vec<f64> },
    /// `u = x_i` clipped smoothly by `s·tanh(x_i/s)`.
    SoftClip { index: usize, scale: f64 },
}

impl CylindricalFunction {
    /// Number of leading coordinates the function depends on.
    pub fn dimension(&self) -> usize {
        match self {
            CylindricalFunction::Constant { .. } => 1,
            CylindricalFunction::DampedCoordinate { index } | CylindricalFunction::Sine { index } => *index,
            CylindricalFunction::SoftClip { index, .. } => *index,
            CylindricalFunction::GaussianProduct { gauss, linear } => (*gauss).max(*linear),
            CylindricalFunction::TiltedGaussian { center } => center.len().max(1),
        }
    }

    /// Rejects zero indices and non-positive scales.
    pub fn validate(&self) -> Result<()> {
        let bad = match self {
            CylindricalFunction::DampedCoordinate { index } | CylindricalFunction::Sine { index } => *index == 0,
            CylindricalFunction::SoftClip { index, scale } => *index == 0 || !(*scale > 0.0),
            CylindricalFunction::GaussianProduct { gauss, linear } => *gauss == 0 || *linear == 0,
            CylindricalFunction::TiltedGaussian { center } => center.is_empty(),
            CylindricalFunction::Constant { value } => !value.is_finite(),
        };
        if bad {
            Err(Error::InvalidParameter(format!("malformed test function {self:?}")))
        } else {
            Ok(())
        }
    }

    /// Value at `x` (coordinates beyond `x.len()` are treated as zero).
    pub fn value(&self, x: &[f64]) -> f64 {
        let c = |i: usize| x.get(i - 1).copied().unwrap_or(0.0);
        match self {
            CylindricalFunction::Constant { value } => *value,
            CylindricalFunction::DampedCoordinate { index } => {
                let v = c(*index);
                v * (-0.5 * v * v).exp()
            }
            CylindricalFunction::GaussianProduct { gauss, linear } => {
                let g = c(*gauss);
                (-g * g).exp() * c(*linear)
            }
            CylindricalFunction::Sine { index } => c(*index).sin(),
            CylindricalFunction::TiltedGaussian { center } => {
                let r2: f64 = center.iter().enumerate().map(|(i, m)| (c(i + 1) - m).powi(2)).sum();
                (-0.5 * r2).exp() * (1.0 + c(1))
            }
            CylindricalFunction::SoftClip { index, scale } => scale * (c(*index) / scale).tanh(),
        }
    }

    /// Partial derivative along coordinate `i` (1-based).
    pub fn partial(&self, x: &[f64], i: usize) -> f64 {
        let c = |k: usize| x.get(k - 1).copied().unwrap_or(0.0);
        match self {
            CylindricalFunction::Constant { .. } => 0.0,
            CylindricalFunction::DampedCoordinate { index } => {
                if i != *index {
                    return 0.0;
                }
                let v = c(i);
                (1.0 - v * v) * (-0.5 * v * v).exp()
            }
            CylindricalFunction::GaussianProduct { gauss, linear } => {
                let g = c(*gauss);
                let e = (-g * g).exp();
                let mut d = 0.0;
                if i == *gauss {
                    d += -2.0 * g * e * c(*linear);
                }
                if i == *linear {
                    d += e;
                }
                d
            }
            CylindricalFunction::Sine { index } => {
                if i == *index {
                    c(i).cos()
                } else {
                    0.0
                }
            }
            CylindricalFunction::TiltedGaussian { center } => {
                if i > center.len() {
                    return 0.0;
                }
                let r2: f64 = center.iter().enumerate().map(|(k, m)| (c(k + 1) - m).powi(2)).sum();
                let e = (-0.5 * r2).exp();
                let mut d = -(c(i) - center[i - 1]) * e * (1.0 + c(1));
                if i == 1 {
                    d += e;
                }
                d
            }
            CylindricalFunction::SoftClip { index, scale } => {
                if i == *index {
                    let t = (c(i) / scale).tanh();
                    1.0 - t * t
                } else {
                    0.0
                }
            }
        }
    }

    /// Gradient in the first `out.len()` coordinates.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.partial(x, i + 1);
        }
    }
}

/// Time profile `g` with `g(T) = 0`, used for space–time test functions `u(t,x) = g(t) f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    /// `g(t) = T - t`.
    Linear,
    /// `g(t) = cos(πt / 2T)`.
    Cosine,
}

impl TimeProfile {
    pub fn value(&self, t: f64, horizon: f64) -> f64 {
        match self {
            TimeProfile::Linear => horizon - t,
            TimeProfile::Cosine => (std::f64::consts::FRAC_PI_2 * t / horizon).cos(),
        }
    }

    pub fn derivative(&self, t: f64, horizon: f64) -> f64 {
        match self {
            TimeProfile::Linear => -1.0,
            TimeProfile::Cosine => {
                let k = std::f64::consts::FRAC_PI_2 / horizon;
                -k * (k * t).sin()
            }
        }
    }
}

/// A separable space–time test function `u(t,x) = g(t) f(x)` with `u(T,·) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeTest {
    pub profile: TimeProfile,
    pub space: CylindricalFunction,
}
