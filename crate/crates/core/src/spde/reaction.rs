//! Polynomial reactions `p`, their Yosida approximations
//! `p_α = (J_α - I)/α = p ∘ J_α`, and the resolvent `J_α = (I - αp)^{-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Newton iteration budget for the resolvent.
pub const RESOLVENT_MAX_ITER: usize = 100;

/// `p(r) = Σ_k c_k r^k`, decreasing on `ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialReaction {
    coeffs: Vec<f64>,
}

impl PolynomialReaction {
    /// Accepts `p ≡ 0` (the Ornstein–Uhlenbeck case) or an odd-degree
    /// (> 1) polynomial with negative leading coefficient whose derivative
    /// is nonpositive on a sampling grid over `[-10, 10]`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        crate::error::require_finite("reaction coefficients", &coeffs)?;
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let p = PolynomialReaction { coeffs };
        if p.is_zero() {
            return Ok(p);
        }
        let degree = p.degree();
        if degree < 3 || degree.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("reaction degree must be odd and > 1, got {degree}")));
        }
        if !(p.coeffs[degree] < 0.0) {
            return Err(Error::InvalidParameter("reaction leading coefficient must be negative".into()));
        }
        for k in 0..=4000 {
            let r = -10.0 + 20.0 * k as f64 / 4000.0;
            if p.derivative(r) > 1e-12 * (1.0 + r.abs()).powi(degree as i32) {
                return Err(Error::InvalidParameter(format!("reaction is not decreasing near r = {r}")));
            }
        }
        Ok(p)
    }

    /// `p ≡ 0`.
    pub fn zero() -> Self {
        PolynomialReaction { coeffs: Vec::new() }
    }

    /// `p(r) = -r³ + c_1 r` with `c_1 ≤ 0`.
    pub fn cubic(c1: f64) -> Result<Self> {
        Self::new(vec![0.0, c1, 0.0, -1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * r + k as f64 * c)
    }

    /// `J_α(r)`: the unique `y` with `y - αp(y) = r`.
    pub fn resolvent(&self, alpha: f64, r: f64) -> Result<f64> {
        yosida_resolvent(self, alpha, r)
    }

    /// `p_α(r)` (`p` itself when `α = 0`).
    pub fn drift(&self, alpha: f64, r: f64) -> Result<f64> {
        yosida_drift(self, alpha, r)
    }

    /// `p_α'(r) = p'(J)/(1 - αp'(J))` (`p'` when `α = 0`).
    pub fn drift_derivative(&self, alpha: f64, r: f64) -> Result<f64> {
        if alpha == 0.0 {
            return Ok(self.derivative(r));
        }
        let j = yosida_resolvent(self, alpha, r)?;
        let d = self.derivative(j);
        Ok(d / (1.0 - alpha * d))
    }
}

/// Solves `y - αp(y) = r` by Newton's method safeguarded with bisection
/// on the bracket `r ± α|p(r)|`.
pub fn yosida_resolvent(p: &PolynomialReaction, alpha: f64, r: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("Yosida parameter must be ≥ 0, got {alpha}")));
    }
    if alpha == 0.0 || p.is_zero() {
        return Ok(r);
    }
    let g = |y: f64| y - alpha * p.value(y) - r;
    let spread = alpha * p.value(r).abs();
    let (mut lo, mut hi) = (r - spread, r + spread);
    if spread == 0.0 {
        return Ok(r);
    }
    let mut y = r;
    // Stop at a few ulps: the drift divides the step `J - r` by α.
    let tol = 4.0 * f64::EPSILON * (1.0 + r.abs());
    for _ in 0..RESOLVENT_MAX_ITER {
        let gy = g(y);
        if gy == 0.0 {
            return Ok(y);
        }
        if gy > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let slope = 1.0 - alpha * p.derivative(y);
        let mut next = y - gy / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= tol || hi - lo <= tol {
            return Ok(next);
        }
        y = next;
    }
    Err(Error::SolverFailure(format!("resolvent did not converge at r = {r}, α = {alpha}")))
}

/// `p_α(r) = (J_α(r) - r)/α`, which equals `p(J_α(r))`.
pub fn yosida_drift(p: &PolynomialReaction, alpha: f64, r: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(p.value(r));
    }
    Ok((yosida_resolvent(p, alpha, r)? - r) / alpha)
}
