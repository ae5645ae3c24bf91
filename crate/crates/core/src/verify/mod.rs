//! Verification functionals for transport solutions: weak-form residuals,
//! mass and entropy audits, the Gronwall entropy bound, approximation of
//! initial densities by cylinder functions, and a uniqueness probe.
//!
//! Spatial integrals `∫ · Ψ² dx` are Riemann sums on a lattice anchored at
//! the centre of `ρ_0` that covers the support of `ρ(t,·)` for all `t ≤ T`.
//! Because every integrand vanishes off that support, enlarging the lattice
//! leaves the sums unchanged.

mod approximation;
mod audits;
mod report;
mod uniqueness;
mod weak;

pub use approximation::{
    approximate_initial_density, ApproximationConfig, ApproximationReport, ApproximationStage, CylinderApproximant,
    DensityFn, StageReport,
};
pub use audits::{
    ball_volume, entropy, entropy_bound_check, mass_conservation, mass_history, slice_integral, EntropyBoundInputs,
    EntropyBoundTerms,
};
pub use report::{SuiteReport, Verdict, VerificationReport};
pub use uniqueness::{sampled_l1_distance, uniqueness_probe};
pub use weak::{weak_residual, weak_residual_studies, weak_residual_study, WeakStudy};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::transport::{rho_history, Lattice, TransportProblem};

/// Resolution of space–time quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Lattice spacing `h` in each coordinate.
    pub spacing: f64,
    /// Trapezoid step in time (a multiple of the flow step).
    pub time_step: f64,
    /// Extra half-width added around the support box.
    pub margin: f64,
}

impl QuadratureSpec {
    pub fn new(spacing: f64, time_step: f64) -> Result<Self> {
        require_positive("spacing", spacing)?;
        require_positive("time_step", time_step)?;
        Ok(QuadratureSpec { spacing, time_step, margin: 0.0 })
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// Lattice covering `supp ρ(t,·)` for every `t ≤ T`.
    pub fn lattice(&self, problem: &TransportProblem) -> Result<Lattice> {
        let reach = problem.horizon() * problem.field.sup_bound();
        if !reach.is_finite() {
            return Err(Error::InvalidParameter("lattice quadrature needs a field with a finite sup bound".into()));
        }
        let half = problem.rho0.radius + reach + self.margin;
        Ok(Lattice::around(&problem.rho0.center, half, self.spacing))
    }

    /// Time nodes `0, τ, …, T`.
    pub fn time_nodes(&self, horizon: f64) -> Result<Vec<f64>> {
        let k = (horizon / self.time_step).round();
        if k < 1.0 || (k * self.time_step - horizon).abs() > 1e-9 * horizon {
            return Err(Error::InvalidParameter(format!(
                "time step {} does not divide the horizon {horizon}",
                self.time_step
            )));
        }
        let k = k as usize;
        Ok((0..=k).map(|i| horizon * i as f64 / k as f64).collect())
    }
}

/// `ρ(t_k, ·)` on every lattice node, with the weight `Ψ²` at each node.
pub(crate) struct LatticeTable {
    pub lattice: Lattice,
    pub points: Vec<Vec<f64>>,
    pub weight: Vec<f64>,
    /// `rho[p][k]`: point-major.
    pub rho: Vec<Vec<f64>>,
}

impl LatticeTable {
    pub fn build(problem: &TransportProblem, times: &[f64], spec: &QuadratureSpec) -> Result<Self> {
        let lattice = spec.lattice(problem)?;
        let points: Vec<Vec<f64>> = lattice.points().collect();
        let rows: Vec<Result<(Vec<f64>, f64)>> = points
            .par_iter()
            .map(|x| {
                // Nodes outside the initial support's reach are exactly zero.
                let rho = rho_history(problem, x, times)?;
                Ok((rho, problem.weight.density(x)))
            })
            .collect();
        let mut rho = Vec::with_capacity(points.len());
        let mut weight = Vec::with_capacity(points.len());
        for row in rows {
            let (r, w) = row?;
            rho.push(r);
            weight.push(w);
        }
        Ok(LatticeTable { lattice, points, weight, rho })
    }

    /// `h^N Σ_p g(p, ρ(t_k, x_p)) Ψ²(x_p)` with compensated summation.
    pub fn integrate(&self, k: usize, g: impl Fn(usize, f64) -> f64) -> f64 {
        let terms: Vec<f64> = (0..self.points.len()).map(|p| g(p, self.rho[p][k]) * self.weight[p]).collect();
        self.lattice.cell_volume() * crate::stats::sum(&terms)
    }
}

/// Composite trapezoid rule on equally spaced values.
pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut terms = values.to_vec();
    terms[0] *= 0.5;
    terms[n - 1] *= 0.5;
    step * crate::stats::sum(&terms)
}

/// `r (ln r - 1)`, extended by continuity to `0` at `r = 0`.
pub(crate) fn entropy_density(r: f64) -> f64 {
    if r > 0.0 {
        r * (r.ln() - 1.0)
    } else {
        0.0
    }
}
