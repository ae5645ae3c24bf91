//! The clip/mollify ladder `Ψ²_{M,l} = (Ψ² ∧ M ∨ M^{-1}) * δ_l` with the
//! polynomial bump `η(u) ∝ (1 - |u|²)³` on the unit ball and
//! `δ_l(x) = l^N η(lx)`, plus the lattice evaluation of the Jensen chain.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ExactSlice, SliceDensity};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::stats;

/// Tensor quadrature nodes per axis for mollifier convolutions with `N ≤ 3`.
pub const QUADRATURE_NODES_PER_AXIS: usize = 33;
/// Monte Carlo draws for mollifier convolutions with `N > 3`.
pub const MC_CONVOLUTION_DRAWS: usize = 10_000;

/// Whether the ladder may skip regularisation for smooth positive sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderMode {
    /// Return `C²`, positive, bounded sources untouched.
    Auto,
    /// Always clip and mollify.
    Force,
}

/// Clip level `M ≥ 1`, mollifier scale `l ≥ 1` and mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub clip: f64,
    pub scale: f64,
    pub mode: LadderMode,
}

impl LadderSpec {
    pub fn new(clip: f64, scale: f64, mode: LadderMode) -> Result<Self> {
        if !(clip >= 1.0 && clip.is_finite()) {
            return Err(Error::InvalidParameter(format!("clip level M must be ≥ 1, got {clip}")));
        }
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("mollifier scale l must be ≥ 1, got {scale}")));
        }
        Ok(LadderSpec { clip, scale, mode })
    }

    #[inline]
    fn clip_value(&self, v: f64) -> f64 {
        v.clamp(1.0 / self.clip, self.clip)
    }
}

/// Unnormalised bump `(1 - |u|²)³` and its gradient factor.
#[inline]
fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r2;
        s * s * s
    }
}

/// Discretised mollifier: offsets `u_k / l` with value and gradient weights.
///
/// Weights are normalised so the discrete kernel has unit mass exactly,
/// which preserves the bounds `M^{-1} ≤ Ψ²_{M,l} ≤ M`.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    dim: usize,
    offsets: Vec<f64>,
    value_weights: Vec<f64>,
    gradient_weights: Vec<f64>,
}

impl MollifierKernel {
    /// Builds the kernel for scale `l` in dimension `dim`: tensor
    /// Gauss–Legendre for `dim ≤ 3`, Monte Carlo otherwise.
    pub fn new(dim: usize, scale: f64, seed: u64) -> Self {
        let mut nodes: Vec<Vec<f64>> = Vec::new();
        let mut base_w: Vec<f64> = Vec::new();
        if dim <= 3 {
            let g = crate::spectral::QuadratureGrid::new(
                crate::spectral::QuadratureRule::GaussLegendre,
                QUADRATURE_NODES_PER_AXIS,
            )
            .expect("33 nodes");
            let t: Vec<f64> = g.nodes().iter().map(|s| 2.0 * s - 1.0).collect();
            let w: Vec<f64> = g.weights().to_vec();
            let total = QUADRATURE_NODES_PER_AXIS.pow(dim as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut u = Vec::with_capacity(dim);
                let mut wt = 1.0;
                for _ in 0..dim {
                    let k = rem % QUADRATURE_NODES_PER_AXIS;
                    rem /= QUADRATURE_NODES_PER_AXIS;
                    u.push(t[k]);
                    wt *= w[k];
                }
                if u.iter().map(|a| a * a).sum::<f64>() < 1.0 {
                    nodes.push(u);
                    base_w.push(wt);
                }
            }
        } else {
            let mut r = rng::stream(seed, domain::MOLLIFIER, dim as u64);
            // Antithetic pairs keep the discrete kernel exactly even.
            while nodes.len() < MC_CONVOLUTION_DRAWS {
                let u: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
                if u.iter().map(|a| a * a).sum::<f64>() < 1.0 {
                    nodes.push(u.iter().map(|a| -a).collect());
                    nodes.push(u);
                    base_w.push(1.0);
                    base_w.push(1.0);
                }
            }
        }
        let eta: Vec<f64> = nodes.iter().zip(&base_w).map(|(u, w)| w * bump(u.iter().map(|a| a * a).sum())).collect();
        let mass = stats::sum(&eta);
        let mut offsets = Vec::with_capacity(nodes.len() * dim);
        let mut value_weights = Vec::with_capacity(nodes.len());
        let mut gradient_weights = Vec::with_capacity(nodes.len() * dim);
        for ((u, w), e) in nodes.iter().zip(&base_w).zip(&eta) {
            let r2: f64 = u.iter().map(|a| a * a).sum();
            let s = 1.0 - r2;
            value_weights.push(e / mass);
            for &ui in u {
                offsets.push(ui / scale);
                // ∂_i η(u) = -6 u_i (1 - |u|²)²; the chain rule contributes a factor l.
                gradient_weights.push(scale * w * (-6.0 * ui * s * s) / mass);
            }
        }
        MollifierKernel { dim, offsets, value_weights, gradient_weights }
    }

    pub fn len(&self) -> usize {
        self.value_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value_weights.is_empty()
    }

    /// `Σ W_k f(x - u_k/l)`: the discrete convolution `f * η_l` at `x`.
    pub fn smooth(&self, x: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
        let d = self.dim;
        let mut z = vec![0.0; d];
        let mut terms = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            for i in 0..d {
                z[i] = x[i] - self.offsets[k * d + i];
            }
            terms.push(self.value_weights[k] * f(&z));
        }
        stats::sum(&terms)
    }

    /// Returns `(Σ W_k f(x - u_k/l), Σ D_k f(x - u_k/l))`, i.e. the
    /// convolution and its gradient with the derivative on the mollifier.
    fn convolve(&self, x: &[f64], f: impl Fn(&[f64]) -> f64, grad: &mut [f64]) -> f64 {
        let d = self.dim;
        let mut z = vec![0.0; d];
        let mut value = 0.0;
        grad[..d].iter_mut().for_each(|g| *g = 0.0);
        for k in 0..self.len() {
            for i in 0..d {
                z[i] = x[i] - self.offsets[k * d + i];
            }
            let v = f(&z);
            value += self.value_weights[k] * v;
            for i in 0..d {
                grad[i] += self.gradient_weights[k * d + i] * v;
            }
        }
        value
    }
}

/// `Ψ²_{M,l}` as a slice density.
#[derive(Clone)]
pub struct LadderDensity {
    source: Arc<dyn SliceDensity>,
    spec: LadderSpec,
    kernel: Option<Arc<MollifierKernel>>,
}

impl std::fmt::Debug for LadderDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LadderDensity").field("spec", &self.spec).field("passthrough", &self.kernel.is_none()).finish()
    }
}

impl LadderDensity {
    /// Applies the ladder to `source`. In [`LadderMode::Auto`] a smooth,
    /// strictly positive, bounded source is returned untouched.
    pub fn new(source: Arc<dyn SliceDensity>, spec: LadderSpec, seed: u64) -> Result<Self> {
        LadderSpec::new(spec.clip, spec.scale, spec.mode)?;
        let kernel = if spec.mode == LadderMode::Auto && source.smooth_positive() {
            None
        } else {
            Some(Arc::new(MollifierKernel::new(source.dim(), spec.scale, seed)))
        };
        Ok(LadderDensity { source, spec, kernel })
    }

    /// True when the source is returned unchanged.
    pub fn is_passthrough(&self) -> bool {
        self.kernel.is_none()
    }

    pub fn spec(&self) -> LadderSpec {
        self.spec
    }

    /// Value and gradient of `Ψ²_{M,l}` at `x`.
    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match &self.kernel {
            None => {
                self.source.log_gradient(x, grad);
                let v = self.source.density(x);
                grad[..self.dim()].iter_mut().for_each(|g| *g *= v);
                v
            }
            Some(k) => k.convolve(x, |z| self.spec.clip_value(self.source.density(z)), grad),
        }
    }
}

impl SliceDensity for LadderDensity {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn density(&self, x: &[f64]) -> f64 {
        match &self.kernel {
            None => self.source.density(x),
            Some(k) => {
                let mut g = vec![0.0; self.dim()];
                k.convolve(x, |z| self.spec.clip_value(self.source.density(z)), &mut g)
            }
        }
    }

    fn log_gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.kernel {
            None => self.source.log_gradient(x, out),
            Some(_) => {
                let v = self.value_and_gradient(x, out);
                out[..self.dim()].iter_mut().for_each(|g| *g /= v);
            }
        }
    }

    fn smooth_positive(&self) -> bool {
        true
    }
}

/// The clipped density `Ψ²_M` with its almost-everywhere gradient
/// (the source gradient inside the band `M^{-1} < Ψ² < M`, zero outside).
#[derive(Clone)]
pub struct ClippedDensity {
    source: Arc<dyn SliceDensity>,
    clip: f64,
}

impl ClippedDensity {
    pub fn new(source: Arc<dyn SliceDensity>, clip: f64) -> Result<Self> {
        if !(clip >= 1.0) {
            return Err(Error::InvalidParameter(format!("clip level must be ≥ 1, got {clip}")));
        }
        Ok(ClippedDensity { source, clip })
    }
}

impl SliceDensity for ClippedDensity {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.source.density(x).clamp(1.0 / self.clip, self.clip)
    }

    fn log_gradient(&self, x: &[f64], out: &mut [f64]) {
        let v = self.source.density(x);
        if v > 1.0 / self.clip && v < self.clip {
            self.source.log_gradient(x, out);
        } else {
            out[..self.dim()].iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// The three exponential integrals `I(ρ) = ∫(e^{ε|∂_iρ/ρ|} - 1)ρ dx` for
/// one direction, ordered along the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenRecord {
    pub clip: f64,
    pub scale: f64,
    pub epsilon: f64,
    pub direction: usize,
    pub ladder: f64,
    pub clipped: f64,
    pub full: f64,
}

impl JensenRecord {
    /// Checks `ladder ≤ clipped ≤ full` up to `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.ladder <= self.clipped + tol && self.clipped <= self.full + tol
    }
}

/// Evaluates the Jensen chain on a lattice of spacing `1/(16 l)` covering the
/// box `center ± half_width` (extended by the mollifier radius).
///
/// The mollified quantities are discrete convolutions of the clipped
/// density and its a.e. gradient with the unit-mass lattice kernel, the
/// derivative sitting on the function as in the pointwise Jensen argument.
/// Supports `N ≤ 3`.
pub fn jensen_chain(
    slice: &ExactSlice,
    clip: f64,
    scale: f64,
    epsilons: &[f64],
    center: &[f64],
    half_width: f64,
) -> Result<Vec<JensenRecord>> {
    let n = slice.dim();
    if n > 3 {
        return Err(Error::InvalidParameter("lattice Jensen chain supports N ≤ 3".into()));
    }
    LadderSpec::new(clip, scale, LadderMode::Force)?;
    crate::error::require_positive("half_width", half_width)?;
    if center.len() != n {
        return Err(Error::InvalidData("center has the wrong dimension".into()));
    }
    const RADIUS_CELLS: i64 = 16;
    let h = 1.0 / (RADIUS_CELLS as f64 * scale);
    let inner = (half_width / h).ceil() as i64;
    let outer = inner + RADIUS_CELLS;
    let side = (2 * outer + 1) as usize;
    let total = side.pow(n as u32);
    let coords = |idx: usize| -> Vec<i64> {
        let mut rem = idx;
        (0..n)
            .map(|_| {
                let k = (rem % side) as i64 - outer;
                rem /= side;
                k
            })
            .collect()
    };

    // Clipped density and a.e. gradient on the extended lattice.
    use rayon::prelude::*;
    let evals: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let k = coords(idx);
            let x: Vec<f64> = k.iter().zip(center).map(|(&ki, c)| c + ki as f64 * h).collect();
            let v = slice.density(&x);
            let mut beta = vec![0.0; n];
            slice.log_gradient(&x, &mut beta);
            let in_band = v > 1.0 / clip && v < clip;
            let grad_m: Vec<f64> = beta.iter().map(|b| if in_band { b * v } else { 0.0 }).collect();
            (v, beta, grad_m)
        })
        .collect();

    // Lattice kernel.
    let mut kernel: Vec<(isize, f64)> = Vec::new();
    let kside = (2 * RADIUS_CELLS + 1) as usize;
    for kidx in 0..kside.pow(n as u32) {
        let mut rem = kidx;
        let mut off = 0isize;
        let mut stride = 1isize;
        let mut r2 = 0.0;
        for _ in 0..n {
            let k = (rem % kside) as i64 - RADIUS_CELLS;
            rem /= kside;
            r2 += (k as f64 / RADIUS_CELLS as f64).powi(2);
            off += k as isize * stride;
            stride *= side as isize;
        }
        let w = bump(r2);
        if w > 0.0 {
            kernel.push((off, w));
        }
    }
    let kmass: f64 = stats::sum(&kernel.iter().map(|k| k.1).collect::<Vec<_>>());
    kernel.iter_mut().for_each(|k| k.1 /= kmass);

    let inner_points: Vec<usize> = (0..total).filter(|&idx| coords(idx).iter().all(|k| k.abs() <= inner)).collect();
    let conv: Vec<(f64, Vec<f64>)> = inner_points
        .par_iter()
        .map(|&idx| {
            let mut v = 0.0;
            let mut g = vec![0.0; n];
            for &(off, w) in &kernel {
                let j = (idx as isize + off) as usize;
                let (val, _, gm) = &evals[j];
                v += w * val.clamp(1.0 / clip, clip);
                for i in 0..n {
                    g[i] += w * gm[i];
                }
            }
            (v, g)
        })
        .collect();

    let cell = h.powi(n as i32);
    let mut out = Vec::new();
    for &eps in epsilons {
        for i in 0..n {
            let ladder: Vec<f64> = conv.iter().map(|(v, g)| ((eps * (g[i] / v).abs()).exp() - 1.0) * v).collect();
            let clipped: Vec<f64> = evals
                .iter()
                .map(|(v, _, gm)| {
                    let vm = v.clamp(1.0 / clip, clip);
                    ((eps * (gm[i] / vm).abs()).exp() - 1.0) * vm
                })
                .collect();
            let full: Vec<f64> = evals.iter().map(|(v, b, _)| ((eps * b[i].abs()).exp() - 1.0) * v).collect();
            out.push(JensenRecord {
                clip,
                scale,
                epsilon: eps,
                direction: i + 1,
                ladder: cell * stats::sum(&ladder),
                clipped: cell * stats::sum(&clipped),
                full: cell * stats::sum(&full),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{ConstantDensity, DisintegrationDensity, GaussianMeasure, GibbsMeasure, ReferenceMeasure};
    use proptest::prelude::*;

    fn gibbs_slice(split: usize) -> ExactSlice {
        let m = Arc::new(ReferenceMeasure::Gibbs(
            GibbsMeasure::new(GaussianMeasure::dirichlet(4).unwrap(), 1.0, 4.0, 20_000, 2).unwrap(),
        ));
        let d = DisintegrationDensity::new(m, split).unwrap();
        let y = d.sample_tail(3, 0);
        d.slice(&y).unwrap()
    }

    #[test]
    fn kernel_has_unit_mass_and_zero_mean_gradient() {
        for dim in 1..=4 {
            let k = MollifierKernel::new(dim, 4.0, 1);
            let mass: f64 = k.value_weights.iter().sum();
            assert!((mass - 1.0).abs() < 1e-13);
            // ∫∂_iη = 0
            for i in 0..dim {
                let s: f64 = (0..k.len()).map(|j| k.gradient_weights[j * dim + i]).sum();
                assert!(s.abs() < 1e-8 * k.len() as f64, "dim {dim}: {s}");
            }
        }
    }

    #[test]
    fn auto_mode_returns_smooth_source_untouched() {
        let s: Arc<dyn SliceDensity> = Arc::new(gibbs_slice(1));
        let l = LadderDensity::new(s.clone(), LadderSpec::new(4.0, 8.0, LadderMode::Auto).unwrap(), 0).unwrap();
        assert!(l.is_passthrough());
        assert_eq!(l.density(&[0.1]), s.density(&[0.1]));
    }

    #[test]
    fn constant_density_is_a_fixed_point() {
        for dim in [1, 2] {
            let s: Arc<dyn SliceDensity> = Arc::new(ConstantDensity { dim, value: 0.5 });
            for l in [1.0, 4.0, 32.0] {
                let lad =
                    LadderDensity::new(s.clone(), LadderSpec::new(4.0, l, LadderMode::Force).unwrap(), 0).unwrap();
                let x = vec![0.3; dim];
                assert!((lad.density(&x) - 0.5).abs() < 1e-14);
                let mut g = vec![1.0; dim];
                lad.log_gradient(&x, &mut g);
                assert!(g.iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn invalid_ladder_parameters() {
        assert!(LadderSpec::new(0.5, 2.0, LadderMode::Force).is_err());
        assert!(LadderSpec::new(2.0, 0.0, LadderMode::Force).is_err());
    }

    #[test]
    fn log_gradient_matches_finite_difference_of_ladder() {
        let s: Arc<dyn SliceDensity> = Arc::new(gibbs_slice(2));
        let lad = LadderDensity::new(s, LadderSpec::new(2.0, 8.0, LadderMode::Force).unwrap(), 0).unwrap();
        let x = [0.05, -0.02];
        let mut g = [0.0; 2];
        lad.log_gradient(&x, &mut g);
        for i in 0..2 {
            let h = 1e-4;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (lad.density(&xp).ln() - lad.density(&xm).ln()) / (2.0 * h);
            // Quadrature of a kinked integrand: agreement to a few percent.
            assert!((fd - g[i]).abs() < 0.05 * (1.0 + g[i].abs()), "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn smooth_ladder_converges_to_source_in_l() {
        // With the clip inactive, the mollification error is O(l^{-2}).
        let s: Arc<dyn SliceDensity> = Arc::new(gibbs_slice(1));
        let err = |l: f64| -> f64 {
            let lad = LadderDensity::new(s.clone(), LadderSpec::new(1e6, l, LadderMode::Force).unwrap(), 0).unwrap();
            (0..41)
                .map(|k| {
                    let x = [-0.4 + 0.02 * k as f64];
                    let mut g1 = [0.0];
                    let mut g2 = [0.0];
                    lad.log_gradient(&x, &mut g1);
                    s.log_gradient(&x, &mut g2);
                    (g1[0] - g2[0]).abs()
                })
                .sum::<f64>()
                / 41.0
        };
        let (e1, e2) = (err(8.0), err(16.0));
        assert!(e2 < 0.6 * e1, "{e1} {e2}");
        assert!(err(1000.0) < 1e-3);
    }

    #[test]
    fn jensen_chain_one_dimensional() {
        let s = gibbs_slice(1);
        for (m, l) in [(2.0, 4.0), (10.0, 16.0)] {
            let recs = jensen_chain(&s, m, l, &[0.01, 0.05], &[0.0], 2.0).unwrap();
            for r in recs {
                assert!(r.holds(1e-6), "{r:?}");
                assert!(r.full > 0.0);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn ladder_respects_clip_bounds(a in -1.0f64..1.0, b in -1.0f64..1.0, m in 1.0f64..10.0) {
            let s: Arc<dyn SliceDensity> = Arc::new(gibbs_slice(2));
            let lad = LadderDensity::new(s, LadderSpec::new(m, 4.0, LadderMode::Force).unwrap(), 0).unwrap();
            let v = lad.density(&[a, b]);
            prop_assert!(v >= 1.0 / m * (1.0 - 1e-12) && v <= m * (1.0 + 1e-12));
        }
    }
}
