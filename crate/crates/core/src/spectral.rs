//! Dirichlet–Laplacian eigenbasis on (0,1), quadrature grids, projection,
//! synthesis and fractional powers.
//!
//! The basis is `e_j(ξ) = √2 sin(jπξ)` with `A e_j = -α_j e_j`, `α_j = π² j²`.
//! The constant `√2` makes the family orthonormal in `L²(0,1)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};

/// A point of the truncated Hilbert space: coefficients in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoords {
    coeffs: Vec<f64>,
}

impl SpectralCoords {
    /// Wraps a coefficient vector; fails on empty or non-finite input.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidData("coefficient vector is empty".into()));
        }
        require_finite("coeffs", &coeffs)?;
        Ok(SpectralCoords { coeffs })
    }

    /// The origin of the `n`-mode space.
    pub fn zeros(n_modes: usize) -> Self {
        SpectralCoords { coeffs: vec![0.0; n_modes.max(1)] }
    }

    /// The `j`-th basis vector (1-based) in the `n`-mode space.
    pub fn unit(j: usize, n_modes: usize) -> Result<Self> {
        if j == 0 || j > n_modes {
            return Err(Error::InvalidIndex(format!("mode {j} outside 1..={n_modes}")));
        }
        let mut c = vec![0.0; n_modes];
        c[j - 1] = 1.0;
        Ok(SpectralCoords { coeffs: c })
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `|x|²_H = Σ a_j²`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }

    /// Keeps the first `n` coefficients (padding with zeros if `n` is larger).
    pub fn truncate(&self, n: usize) -> SpectralCoords {
        let mut c = vec![0.0; n.max(1)];
        let k = n.min(self.coeffs.len());
        c[..k].copy_from_slice(&self.coeffs[..k]);
        SpectralCoords { coeffs: c }
    }
}

/// Quadrature rule on (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    UniformMidpoint,
    GaussLegendre,
}

/// Nodes and positive weights on (0,1) with unit total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: QuadratureRule,
}

impl QuadratureGrid {
    /// Builds a grid with `n ≥ 1` nodes.
    pub fn new(rule: QuadratureRule, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        Ok(match rule {
            QuadratureRule::UniformMidpoint => QuadratureGrid {
                nodes: (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect(),
                weights: vec![1.0 / n as f64; n],
                rule,
            },
            QuadratureRule::GaussLegendre => {
                let (x, w) = gauss_legendre(n);
                QuadratureGrid {
                    nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
                    weights: w.iter().map(|v| 0.5 * v).collect(),
                    rule,
                }
            }
        })
    }

    /// The default 512-node Gauss–Legendre grid.
    pub fn default_grid() -> Self {
        Self::new(QuadratureRule::GaussLegendre, 512).expect("512 > 0")
    }

    /// Smallest uniform-midpoint grid that integrates every product
    /// `e_i · q(x)` exactly, where `x` spans `n_modes` modes and `q` is a
    /// polynomial of degree `degree`.
    ///
    /// The midpoint rule with `m` nodes is exact for `cos(kπξ)` whenever `k`
    /// is not a non-zero multiple of `2m`; the integrand has frequencies up to
    /// `(degree + 1)·n_modes`.
    pub fn exact_for_polynomial(n_modes: usize, degree: usize) -> Self {
        let m = ((degree + 1) * n_modes) / 2 + 1;
        Self::new(QuadratureRule::UniformMidpoint, m).expect("m > 0")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature of the sampled function.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1,1] by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Eigenvalue data `α_j = π² j²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub index: usize,
    pub eigenvalue: f64,
}

impl EigenData {
    pub fn new(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidIndex("mode index must be ≥ 1".into()));
        }
        Ok(EigenData { index: j, eigenvalue: eigenvalue(j) })
    }
}

/// `α_j = π² j²` (no index check; `j ≥ 1` is assumed).
#[inline]
pub fn eigenvalue(j: usize) -> f64 {
    PI * PI * (j * j) as f64
}

/// Values of `e_j` on the grid together with `α_j`.
pub fn eigenpair(j: i64, grid: &QuadratureGrid) -> Result<(Vec<f64>, f64)> {
    if j < 1 {
        return Err(Error::InvalidIndex(format!("mode index must be ≥ 1, got {j}")));
    }
    let j = j as usize;
    let vals = grid.nodes().iter().map(|&s| SQRT_2 * (j as f64 * PI * s).sin()).collect();
    Ok((vals, eigenvalue(j)))
}

/// A quadrature grid with cached eigenfunction tables for the first
/// `n_modes` modes; the workhorse behind synthesis and projection.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    grid: QuadratureGrid,
    n_modes: usize,
    /// `table[j * G + g] = e_{j+1}(ξ_g)`.
    table: Vec<f64>,
    /// `weighted[j * G + g] = w_g e_{j+1}(ξ_g)`.
    weighted: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(grid: QuadratureGrid, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("n_modes must be ≥ 1".into()));
        }
        let g = grid.len();
        let mut table = vec![0.0; n_modes * g];
        let mut weighted = vec![0.0; n_modes * g];
        for j in 0..n_modes {
            for (k, (&s, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
                let v = SQRT_2 * ((j + 1) as f64 * PI * s).sin();
                table[j * g + k] = v;
                weighted[j * g + k] = w * v;
            }
        }
        Ok(SpectralBasis { grid, n_modes, table, weighted })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// Row of `e_j` values (1-based `j`).
    pub fn mode(&self, j: usize) -> &[f64] {
        let g = self.grid.len();
        &self.table[(j - 1) * g..j * g]
    }

    /// Row of `w_g e_j(ξ_g)` values (1-based `j`).
    pub fn weighted_mode(&self, j: usize) -> &[f64] {
        let g = self.grid.len();
        &self.weighted[(j - 1) * g..j * g]
    }

    /// `out[g] = Σ_j coeffs[j] e_{j+1}(ξ_g)` over the supplied coefficients
    /// (at most `n_modes` of them).
    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let g = self.grid.len();
        out[..g].iter_mut().for_each(|v| *v = 0.0);
        for (j, &a) in coeffs.iter().enumerate().take(self.n_modes) {
            if a == 0.0 {
                continue;
            }
            let row = &self.table[j * g..(j + 1) * g];
            for (o, e) in out.iter_mut().zip(row) {
                *o += a * e;
            }
        }
    }

    /// `out[j] = Σ_g w_g values[g] e_{j+1}(ξ_g)` for `j < out.len()`.
    pub fn project_into(&self, values: &[f64], out: &mut [f64]) {
        let g = self.grid.len();
        for (j, o) in out.iter_mut().enumerate().take(self.n_modes) {
            let row = &self.weighted[j * g..(j + 1) * g];
            *o = row.iter().zip(values).map(|(w, v)| w * v).sum();
        }
    }

    /// Quadrature inner product of `values` with `e_j` (1-based `j`).
    pub fn coefficient(&self, values: &[f64], j: usize) -> f64 {
        self.weighted_mode(j).iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Projects grid samples onto the first `n_modes` eigenfunctions.
pub fn project(values: &[f64], n_modes: usize, grid: &QuadratureGrid) -> Result<SpectralCoords> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("n_modes must be ≥ 1".into()));
    }
    if values.len() != grid.len() {
        return Err(Error::InvalidData(format!("{} values for a {}-node grid", values.len(), grid.len())));
    }
    require_finite("values", values)?;
    let basis = SpectralBasis::new(grid.clone(), n_modes)?;
    let mut c = vec![0.0; n_modes];
    basis.project_into(values, &mut c);
    Ok(SpectralCoords { coeffs: c })
}

/// Evaluates `Σ a_j e_j` at the grid nodes.
pub fn synthesize(x: &SpectralCoords, grid: &QuadratureGrid) -> Vec<f64> {
    let basis = SpectralBasis::new(grid.clone(), x.n_modes()).expect("n_modes ≥ 1");
    let mut out = vec![0.0; grid.len()];
    basis.synthesize_into(x.coeffs(), &mut out);
    out
}

/// Applies `(-A)^θ`: `a_j ↦ α_j^θ a_j`.
pub fn apply_fractional_power(theta: f64, x: &SpectralCoords) -> SpectralCoords {
    let coeffs = x
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, a)| if theta == 0.0 { *a } else { eigenvalue(j + 1).powf(theta) * a })
        .collect();
    SpectralCoords { coeffs }
}

/// Discrete `L^p(0,1)` norm of grid samples.
pub fn lp_norm(values: &[f64], p: f64, grid: &QuadratureGrid) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be ≥ 1, got {p}")));
    }
    if values.len() != grid.len() {
        return Err(Error::InvalidData(format!("{} values for a {}-node grid", values.len(), grid.len())));
    }
    require_finite("values", values)?;
    let s: f64 = grid.weights().iter().zip(values).map(|(w, v)| w * v.abs().powf(p)).sum();
    Ok(s.powf(1.0 / p))
}
