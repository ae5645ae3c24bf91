//! Cylindrical drift fields `F = Σ_{i≤N} f_i(t, x_1..x_N) e_i`, their
//! divergences and the adjoint divergence
//! `D*F = -div F - Σ f_i β_{e_i}` relative to a reference measure or a
//! slice density.

mod nemytskii;
mod probes;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use nemytskii::{GalerkinNemytskii, NemytskiiField, Reaction, DEFAULT_NEMYTSKII_NODES};
pub use probes::{
    cf_delta, cf_delta_at_tail, claims_probe, suggested_delta, CfDeltaConfig, ClaimsReport, ConditionProbe,
};

use crate::error::{Error, Result};
use crate::functions::CylindricalFunction;
use crate::measures::{ReferenceMeasure, SliceDensity};
use crate::spectral::SpectralCoords;

/// Declared regularity of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
    C2,
}

/// The concrete component functions of a cylindrical field.
#[derive(Debug, Clone)]
pub enum FieldKind {
    /// `F ≡ 0`.
    Zero,
    /// `F ≡ c`.
    Constant(Vec<f64>),
    /// `F(t) = c cos(2πνt)`, a time-dependent spatially constant field.
    Pulsed { amplitude: Vec<f64>, frequency: f64 },
    /// `F_i(x) = d_i x_i` (unbounded; flow tests only).
    Linear(Vec<f64>),
    /// `F = s (x_2, -x_1)` (unbounded; flow tests only).
    Rotation { scale: f64 },
    /// `F = s (x_2, -x_1) / (1 + x_1² + x_2²)`: bounded and divergence-free.
    Swirl { scale: f64 },
    /// `F = (x_1², 0, …)` (unbounded; divergence tests).
    Quadratic,
    /// `F = (min(|x_1|, 1), 0, …)`: continuous only.
    Kink,
    /// `F_n(x) = ε_n sin(x_n)`: `Λ F_0` with `Λe_n = ε_n e_n`, `F_0 = sin` componentwise.
    Smoothed { eps: Vec<f64> },
    /// Galerkin truncation of a Nemytskii field.
    Nemytskii(GalerkinNemytskii),
}

/// A field `F: [0,T] × ℝ^N → ℝ^N` depending on the first `N` coordinates.
#[derive(Debug, Clone)]
pub struct CylindricalField {
    kind: FieldKind,
    dim: usize,
    horizon: f64,
}

impl CylindricalField {
    /// Validates the component data and the horizon `T > 0`.
    pub fn new(kind: FieldKind, dim: usize, horizon: f64) -> Result<Self> {
        crate::error::require_positive("horizon", horizon)?;
        if dim == 0 {
            return Err(Error::InvalidParameter("field dimension must be ≥ 1".into()));
        }
        let need = |len: usize, what: &str| -> Result<()> {
            if len != dim {
                Err(Error::InvalidData(format!("{what} has {len} entries, field dimension is {dim}")))
            } else {
                Ok(())
            }
        };
        match &kind {
            FieldKind::Constant(c) => need(c.len(), "constant")?,
            FieldKind::Pulsed { amplitude, .. } => need(amplitude.len(), "amplitude")?,
            FieldKind::Linear(d) => need(d.len(), "diagonal")?,
            FieldKind::Smoothed { eps } => {
                need(eps.len(), "eps")?;
                if eps.iter().any(|e| !(*e > 0.0)) {
                    return Err(Error::InvalidParameter("smoothing eigenvalues must be positive".into()));
                }
            }
            FieldKind::Rotation { .. } | FieldKind::Swirl { .. } if dim < 2 => {
                return Err(Error::InvalidParameter("rotations need dimension ≥ 2".into()))
            }
            FieldKind::Nemytskii(g) => need(g.dim(), "Galerkin level")?,
            _ => {}
        }
        Ok(CylindricalField { kind, dim, horizon })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// Number of components `N_j`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn smoothness(&self) -> Smoothness {
        match self.kind {
            FieldKind::Kink => Smoothness::C0,
            _ => Smoothness::C2,
        }
    }

    /// True when `F` does not depend on time.
    pub fn is_autonomous(&self) -> bool {
        !matches!(self.kind, FieldKind::Pulsed { .. })
    }

    /// Declared bound on `sup |F(t,x)|`; infinite for unbounded kinds.
    pub fn sup_bound(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        match &self.kind {
            FieldKind::Zero => 0.0,
            FieldKind::Constant(c) => norm(c),
            FieldKind::Pulsed { amplitude, .. } => norm(amplitude),
            FieldKind::Linear(_) | FieldKind::Rotation { .. } | FieldKind::Quadratic => f64::INFINITY,
            FieldKind::Swirl { scale } => 0.5 * scale.abs(),
            FieldKind::Kink => 1.0,
            FieldKind::Smoothed { eps } => norm(eps),
            FieldKind::Nemytskii(g) => g.sup_bound(),
        }
    }

    /// Fails unless `t ∈ [0, T]`.
    pub fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)))
        }
    }

    /// Writes `F(t,x)` into `out[..N]` and returns `div F(t,x)` (NaN for
    /// continuous-only fields). `x` must hold at least `N` coordinates.
    /// No domain checks: this is the hot path of the flow integrators.
    pub fn eval_with_divergence(&self, t: f64, x: &[f64], out: &mut [f64]) -> f64 {
        let n = self.dim;
        match &self.kind {
            FieldKind::Zero => {
                out[..n].iter_mut().for_each(|o| *o = 0.0);
                0.0
            }
            FieldKind::Constant(c) => {
                out[..n].copy_from_slice(c);
                0.0
            }
            FieldKind::Pulsed { amplitude, frequency } => {
                let s = (2.0 * PI * frequency * t).cos();
                for (o, a) in out.iter_mut().zip(amplitude) {
                    *o = a * s;
                }
                0.0
            }
            FieldKind::Linear(d) => {
                for i in 0..n {
                    out[i] = d[i] * x[i];
                }
                d.iter().sum()
            }
            FieldKind::Rotation { scale } => {
                out[..n].iter_mut().for_each(|o| *o = 0.0);
                out[0] = scale * x[1];
                out[1] = -scale * x[0];
                0.0
            }
            FieldKind::Swirl { scale } => {
                out[..n].iter_mut().for_each(|o| *o = 0.0);
                let d = 1.0 + x[0] * x[0] + x[1] * x[1];
                out[0] = scale * x[1] / d;
                out[1] = -scale * x[0] / d;
                0.0
            }
            FieldKind::Quadratic => {
                out[..n].iter_mut().for_each(|o| *o = 0.0);
                out[0] = x[0] * x[0];
                2.0 * x[0]
            }
            FieldKind::Kink => {
                out[..n].iter_mut().for_each(|o| *o = 0.0);
                out[0] = x[0].abs().min(1.0);
                f64::NAN
            }
            FieldKind::Smoothed { eps } => {
                let mut div = 0.0;
                for i in 0..n {
                    out[i] = eps[i] * x[i].sin();
                    div += eps[i] * x[i].cos();
                }
                div
            }
            FieldKind::Nemytskii(g) => g.eval_with_divergence(x, out),
        }
    }

    /// `F(t,x)` in the truncated space: components beyond `N` are zero.
    pub fn eval(&self, t: f64, x: &SpectralCoords) -> Result<SpectralCoords> {
        self.check_time(t)?;
        if x.n_modes() < self.dim {
            return Err(Error::InvalidData(format!("point has {} modes, field needs {}", x.n_modes(), self.dim)));
        }
        let mut out = vec![0.0; x.n_modes()];
        self.eval_with_divergence(t, x.coeffs(), &mut out);
        SpectralCoords::new(out)
    }

    /// `Σ_i ∂_{x_i} f_i(t,x)`; analytic for every catalog kind.
    pub fn divergence(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        self.require_differentiable()?;
        let mut out = vec![0.0; self.dim];
        Ok(self.eval_with_divergence(t, x, &mut out))
    }

    /// Central-difference divergence with step `1e-5 (1 + |x_i|)`.
    pub fn divergence_fd(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        self.require_differentiable()?;
        Ok(fd_divergence(self.dim, x, |z, out| {
            self.eval_with_divergence(t, z, out);
        }))
    }

    pub fn require_differentiable(&self) -> Result<()> {
        if self.smoothness() < Smoothness::C1 {
            Err(Error::NotDifferentiable(format!("{:?} is only continuous", self.kind)))
        } else {
            Ok(())
        }
    }
}

/// Central-difference divergence of `g: ℝ^N → ℝ^N` at `x`.
fn fd_divergence(n: usize, x: &[f64], g: impl Fn(&[f64], &mut [f64])) -> f64 {
    let mut z = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut div = 0.0;
    for i in 0..n {
        let h = 1e-5 * (1.0 + x[i].abs());
        z[i] = x[i] + h;
        g(&z, &mut fp);
        z[i] = x[i] - h;
        g(&z, &mut fm);
        z[i] = x[i];
        div += (fp[i] - fm[i]) / (2.0 * h);
    }
    div
}

/// Where the logarithmic derivatives `β_{e_i}` come from.
#[derive(Clone, Copy)]
pub enum BetaSource<'a> {
    /// Exact `β_{e_i}(x)` of a reference measure on its full truncated space.
    Measure(&'a ReferenceMeasure),
    /// Log-gradient of a slice density (exact `Ψ²_N(·,y)` or a ladder).
    Slice(&'a dyn SliceDensity),
}

impl BetaSource<'_> {
    fn fill(&self, x: &[f64], out: &mut [f64]) {
        match self {
            BetaSource::Measure(m) => m.beta_basis(x, out),
            BetaSource::Slice(s) => s.log_gradient(x, out),
        }
    }
}

/// `D*F(t,x) = -div F(t,x) - Σ_{i≤N} f_i(t,x) β_{e_i}(x)`.
pub fn dstar(field: &CylindricalField, beta: BetaSource<'_>, t: f64, x: &[f64]) -> Result<f64> {
    field.check_time(t)?;
    field.require_differentiable()?;
    if let BetaSource::Slice(s) = beta {
        if s.dim() != field.dim() {
            return Err(Error::InvalidData(format!("slice dimension {} ≠ field dimension {}", s.dim(), field.dim())));
        }
    }
    if x.len() < field.dim() {
        return Err(Error::InvalidData("point has fewer coordinates than the field".into()));
    }
    Ok(dstar_unchecked(field, beta, t, x))
}

/// [`dstar`] without validation, for inner loops.
pub fn dstar_unchecked(field: &CylindricalField, beta: BetaSource<'_>, t: f64, x: &[f64]) -> f64 {
    let n = field.dim();
    let mut f = vec![0.0; n];
    let div = field.eval_with_divergence(t, x, &mut f);
    let mut b = vec![0.0; n];
    beta.fill(x, &mut b);
    -div - f.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>()
}

/// Largest residual of `D*(φF) = φ D*F - ⟨Dφ, F⟩` over the points, with
/// the left side evaluated from a finite-difference divergence of the
/// product field and the right side analytically.
pub fn dstar_product_rule_check(
    field: &CylindricalField,
    phi: &CylindricalFunction,
    beta: BetaSource<'_>,
    t: f64,
    points: &[Vec<f64>],
) -> Result<f64> {
    field.check_time(t)?;
    field.require_differentiable()?;
    let n = field.dim();
    let mut worst = 0.0f64;
    for x in points {
        if x.len() < n {
            return Err(Error::InvalidData("probe point has too few coordinates".into()));
        }
        let mut f = vec![0.0; n];
        field.eval_with_divergence(t, x, &mut f);
        let mut b = vec![0.0; n];
        beta.fill(x, &mut b);
        let div_prod = fd_divergence(n, x, |z, out| {
            field.eval_with_divergence(t, z, out);
            let p = phi.value(z);
            out[..n].iter_mut().for_each(|o| *o *= p);
        });
        let p = phi.value(x);
        let lhs = -div_prod - p * f.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>();
        let rhs_dstar = dstar_unchecked(field, beta, t, x);
        let grad_dot: f64 = (0..n).map(|i| phi.partial(x, i + 1) * f[i]).sum();
        let rhs = p * rhs_dstar - grad_dot;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
