//! Density solutions of the continuity equation
//! `D_t ρ + ⟨F, Dρ⟩ = ρ D*F` through the Feynman–Kac representation
//!
//! `ρ(t,x) = ρ_0(X(0)) exp(∫_0^t D*F(u, X(u)) du)`,
//!
//! where `X` is the characteristic of `F` through `(t,x)`. Characteristics are
//! traced backward with the reversed field `-F(t - σ, ·)`. By default the
//! exponent is carried as an extra state component, so it inherits the flow
//! scheme's order.

mod flow;
mod initial;

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

pub use flow::{flow, ExponentRule, FlowConfig, Integrator};
pub use initial::{InitialDensity, Lattice, Profile};

use crate::error::{Error, Result};
use crate::fields::CylindricalField;
use crate::measures::SliceDensity;
use flow::{rk_step, RkWork};

/// Exponents above this are reported instead of overflowing to infinity.
pub const MAX_EXPONENT: f64 = 700.0;

/// Everything that determines `ρ`: the initial density, the field, the
/// slice density `Ψ²_N` supplying `β` (exact or a ladder element), and the
/// flow discretisation.
#[derive(Clone)]
pub struct TransportProblem {
    pub rho0: InitialDensity,
    pub field: CylindricalField,
    pub weight: Arc<dyn SliceDensity>,
    pub flow: FlowConfig,
}

impl std::fmt::Debug for TransportProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransportProblem")
            .field("rho0", &self.rho0)
            .field("field", &self.field)
            .field("flow", &self.flow)
            .finish_non_exhaustive()
    }
}

impl TransportProblem {
    pub fn new(
        rho0: InitialDensity,
        field: CylindricalField,
        weight: Arc<dyn SliceDensity>,
        flow: FlowConfig,
    ) -> Result<Self> {
        let n = field.dim();
        if rho0.dim() != n || weight.dim() != n {
            return Err(Error::InvalidData(format!(
                "dimensions differ: field {n}, initial density {}, weight {}",
                rho0.dim(),
                weight.dim()
            )));
        }
        field.require_differentiable()?;
        Ok(TransportProblem { rho0, field, weight, flow })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.field.horizon()
    }

    /// Radius of an origin-centred ball containing `supp ρ(t,·)` for all
    /// `t ≤ T`: `R_0 + T ‖F‖_∞`.
    pub fn support_radius(&self) -> f64 {
        self.rho0.support_radius() + self.horizon() * self.field.sup_bound()
    }

    /// `D*F(t,x)` against this problem's weight.
    pub fn dstar(&self, t: f64, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut f = vec![0.0; n];
        let mut b = vec![0.0; n];
        let div = self.field.eval_with_divergence(t, x, &mut f);
        self.weight.log_gradient(x, &mut b);
        -div - dot(&f, &b)
    }

    /// True when `x` is provably outside `supp ρ(t,·)`.
    fn outside_support(&self, t: f64, x: &[f64]) -> bool {
        let reach = t * self.field.sup_bound();
        reach.is_finite() && self.rho0.box_distance(x) > reach * (1.0 + 1e-12)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidData(format!("point has {} coordinates, expected {}", x.len(), self.dim())));
        }
        crate::error::require_finite("x", x)
    }

    fn finish(&self, t: f64, x: &[f64], y: &[f64], exponent: f64) -> Result<f64> {
        let r0 = self.rho0.value(y);
        if r0 == 0.0 {
            return Ok(0.0);
        }
        if !(exponent <= MAX_EXPONENT) {
            return Err(Error::RepresentationOverflow { t, x: x.to_vec() });
        }
        Ok(r0 * exponent.exp())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Backward sweep along the characteristic ending at `(t_end, x)`.
///
/// Runs `steps` steps of length `h` in the age variable `σ` (time
/// `t_end - σ`), calling `record(k, y, E)` after step `k`.
struct Sweep<'a> {
    problem: &'a TransportProblem,
    f: Vec<f64>,
    b: Vec<f64>,
    work: RkWork,
}

impl<'a> Sweep<'a> {
    fn new(problem: &'a TransportProblem) -> Self {
        let n = problem.dim();
        Sweep { problem, f: vec![0.0; n], b: vec![0.0; n], work: RkWork::default() }
    }

    fn run(&mut self, t_end: f64, x: &[f64], h: f64, steps: usize, mut record: impl FnMut(usize, &[f64], f64)) {
        let p = self.problem;
        let n = p.dim();
        let cfg = p.flow;
        let Sweep { f, b, work, .. } = self;
        match cfg.exponent {
            ExponentRule::Augmented => {
                let mut state = x.to_vec();
                state.push(0.0);
                let mut rhs = |sigma: f64, z: &[f64], o: &mut [f64]| {
                    let time = t_end - sigma;
                    let div = p.field.eval_with_divergence(time, &z[..n], f);
                    p.weight.log_gradient(&z[..n], b);
                    for i in 0..n {
                        o[i] = -f[i];
                    }
                    o[n] = -div - dot(f, b);
                };
                for k in 0..steps {
                    rk_step(cfg.integrator, k as f64 * h, h, &mut state, work, &mut rhs);
                    record(k + 1, &state[..n], state[n]);
                }
            }
            ExponentRule::Trapezoid => {
                let mut y = x.to_vec();
                let mut exponent = 0.0;
                let mut ds = p.dstar(t_end, &y);
                let mut rhs = |sigma: f64, z: &[f64], o: &mut [f64]| {
                    p.field.eval_with_divergence(t_end - sigma, z, o);
                    o.iter_mut().for_each(|v| *v = -*v);
                };
                for k in 0..steps {
                    rk_step(cfg.integrator, k as f64 * h, h, &mut y, work, &mut rhs);
                    let next = p.dstar(t_end - (k + 1) as f64 * h, &y);
                    exponent += 0.5 * h * (ds + next);
                    ds = next;
                    record(k + 1, &y, exponent);
                }
            }
        }
    }
}

/// `ρ(t,x)` by the Feynman–Kac representation.
///
/// Returns exactly zero when `x` is farther than `t‖F‖_∞` from the support
/// of `ρ_0`; fails with a representation-overflow error naming `(t,x)` when
/// the exponent exceeds [`MAX_EXPONENT`].
pub fn feynman_kac(problem: &TransportProblem, t: f64, x: &[f64]) -> Result<f64> {
    problem.field.check_time(t)?;
    problem.check_point(x)?;
    if problem.outside_support(t, x) {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(problem.rho0.value(x));
    }
    let steps = problem.flow.steps_for(t);
    let h = t / steps as f64;
    let mut end = (x.to_vec(), 0.0);
    Sweep::new(problem).run(t, x, h, steps, |k, y, e| {
        if k == steps {
            end = (y.to_vec(), e);
        }
    });
    problem.finish(t, x, &end.0, end.1)
}

/// `ρ(t_k, x)` for every time in `times` (ascending, within `[0,T]`).
///
/// Autonomous fields need a single backward sweep: the characteristic of
/// age `σ` through `x` is the same for every end time, so `ρ(σ,x)` is read
/// off at each age. Time-dependent fields fall back to one sweep per time.
pub fn rho_history(problem: &TransportProblem, x: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    problem.check_point(x)?;
    for &t in times {
        problem.field.check_time(t)?;
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be ascending".into()));
    }
    if !problem.field.is_autonomous() {
        return times.iter().map(|&t| feynman_kac(problem, t, x)).collect();
    }
    problem.flow.check_divides(times)?;
    let t_max = times.last().copied().unwrap_or(0.0);
    let dt = problem.flow.dt;
    let targets: Vec<usize> = times.iter().map(|t| (t / dt).round() as usize).collect();
    let total = targets.last().copied().unwrap_or(0);
    let mut ends: Vec<(Vec<f64>, f64)> = vec![(x.to_vec(), 0.0); total + 1];
    // Only the requested ages are stored.
    let wanted: std::collections::BTreeSet<usize> = targets.iter().copied().collect();
    if total > 0 {
        Sweep::new(problem).run(t_max, x, dt, total, |k, y, e| {
            if wanted.contains(&k) {
                ends[k] = (y.to_vec(), e);
            }
        });
    }
    times
        .iter()
        .zip(&targets)
        .map(
            |(&t, &k)| {
                if problem.outside_support(t, x) {
                    Ok(0.0)
                } else {
                    problem.finish(t, x, &ends[k].0, ends[k].1)
                }
            },
        )
        .collect()
}

/// `ρ` tabulated on a time grid × point set.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    problem: TransportProblem,
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    /// `values[k][p] = ρ(times[k], points[p])`.
    values: Vec<Vec<f64>>,
}

impl TransportSolution {
    pub fn problem(&self) -> &TransportProblem {
        &self.problem
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Tabulated values at `times[k]`, one per point.
    pub fn values_at(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn support_radius(&self) -> f64 {
        self.problem.support_radius()
    }

    /// `ρ(t,x)` at an arbitrary point, computed on demand.
    pub fn rho(&self, t: f64, x: &[f64]) -> Result<f64> {
        feynman_kac(&self.problem, t, x)
    }

    /// Writes `t, x_1..x_N, rho` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.problem.dim()).map(|i| format!("x_{i}")))
            .chain(std::iter::once("rho".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (k, t) in self.times.iter().enumerate() {
            for (p, x) in self.points.iter().enumerate() {
                write!(out, "{t:e}")?;
                for v in x {
                    write!(out, ",{v:e}")?;
                }
                writeln!(out, ",{:e}", self.values[k][p])?;
            }
        }
        Ok(())
    }
}

/// Solves on `time_grid × eval_points` (points evaluated in parallel).
pub fn solve(problem: TransportProblem, time_grid: &[f64], eval_points: &[Vec<f64>]) -> Result<TransportSolution> {
    let columns: Vec<Result<Vec<f64>>> = eval_points.par_iter().map(|x| rho_history(&problem, x, time_grid)).collect();
    let mut values = vec![Vec::with_capacity(eval_points.len()); time_grid.len()];
    for column in columns {
        for (k, v) in column?.into_iter().enumerate() {
            values[k].push(v);
        }
    }
    Ok(TransportSolution { problem, times: time_grid.to_vec(), points: eval_points.to_vec(), values })
}

/// Pointwise residual `∂_t ρ + ⟨F, ∇ρ⟩ - ρ D*F` by central differences
/// with steps `h_t`, `h_x`; requires `[t - h_t, t + h_t] ⊂ [0,T]`.
pub fn pde_residual(problem: &TransportProblem, t: f64, x: &[f64], h_t: f64, h_x: f64) -> Result<f64> {
    crate::error::require_positive("h_t", h_t)?;
    crate::error::require_positive("h_x", h_x)?;
    if t - h_t < 0.0 || t + h_t > problem.horizon() {
        return Err(Error::Domain(format!("[{}, {}] leaves [0, T]", t - h_t, t + h_t)));
    }
    let n = problem.dim();
    let rho = feynman_kac(problem, t, x)?;
    let dt_rho = (feynman_kac(problem, t + h_t, x)? - feynman_kac(problem, t - h_t, x)?) / (2.0 * h_t);
    let mut f = vec![0.0; n];
    problem.field.eval_with_divergence(t, x, &mut f);
    let mut z = x.to_vec();
    let mut transport = 0.0;
    for i in 0..n {
        z[i] = x[i] + h_x;
        let up = feynman_kac(problem, t, &z)?;
        z[i] = x[i] - h_x;
        let down = feynman_kac(problem, t, &z)?;
        z[i] = x[i];
        transport += f[i] * (up - down) / (2.0 * h_x);
    }
    Ok(dt_rho + transport - rho * problem.dstar(t, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldKind, NemytskiiField, Reaction};
    use crate::measures::{
        ExactSlice, GaussianMeasure, GibbsMeasure, LadderDensity, LadderMode, LadderSpec, ReferenceMeasure,
    };
    use crate::stats;

    const LAMBDA: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;

    fn gaussian_slice() -> Arc<dyn SliceDensity> {
        let m = Arc::new(ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(1).unwrap()));
        Arc::new(ExactSlice::new(m, 1, &[]).unwrap())
    }

    fn constant_problem(c: f64, dt: f64) -> TransportProblem {
        let field = CylindricalField::new(FieldKind::Constant(vec![c]), 1, 1.0).unwrap();
        let rho0 = InitialDensity::bump(vec![0.0], 0.3).unwrap();
        TransportProblem::new(rho0, field, gaussian_slice(), FlowConfig::rk4(dt).unwrap()).unwrap()
    }

    fn closed_form(p: &TransportProblem, c: f64, t: f64, x: f64) -> f64 {
        p.rho0.value(&[x - c * t]) * (LAMBDA * c * (x * t - 0.5 * c * t * t)).exp()
    }

    #[test]
    fn constant_field_matches_closed_form() {
        let c = 0.3;
        let p = constant_problem(c, 1e-3);
        for &t in &[0.25, 0.5, 1.0] {
            for &x in &[-0.1, 0.05, 0.2, 0.4] {
                let got = feynman_kac(&p, t, &[x]).unwrap();
                let want = closed_form(&p, c, t, x);
                assert!((got - want).abs() < 1e-6 * want.max(1.0), "t={t} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn trapezoid_rule_agrees_on_linear_exponent() {
        let mut p = constant_problem(0.3, 1e-3);
        p.flow = p.flow.with_exponent(ExponentRule::Trapezoid);
        let got = feynman_kac(&p, 0.7, &[0.1]).unwrap();
        assert!((got - closed_form(&p, 0.3, 0.7, 0.1)).abs() < 1e-9);
    }

    #[test]
    fn history_sweep_matches_pointwise_evaluation() {
        let p = constant_problem(0.3, 1e-3);
        let times = [0.0, 0.125, 0.5, 1.0];
        let h = rho_history(&p, &[0.15], &times).unwrap();
        for (t, v) in times.iter().zip(&h) {
            let direct = feynman_kac(&p, *t, &[0.15]).unwrap();
            assert!((v - direct).abs() < 1e-12 * direct.max(1.0));
        }
        assert!(rho_history(&p, &[0.15], &[0.0005]).is_err());
    }

    #[test]
    fn residual_is_second_order_in_the_difference_step() {
        let p = constant_problem(0.3, 1e-3);
        let r1 = pde_residual(&p, 0.5, &[0.1], 1e-2, 1e-2).unwrap().abs();
        let r2 = pde_residual(&p, 0.5, &[0.1], 5e-3, 5e-3).unwrap().abs();
        let r3 = pde_residual(&p, 0.5, &[0.1], 1e-3, 1e-3).unwrap().abs();
        let slope = stats::log_log_slope(&[1e-2, 5e-3, 1e-3], &[r1, r2, r3]);
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
        assert!(r3 < 1e-4);
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let p = constant_problem(0.0, 1e-3);
        let r = pde_residual(&p, 0.5, &[0.05], 1e-3, 1e-3).unwrap();
        assert!(r.abs() < 1e-10);
    }

    #[test]
    fn pulsed_field_residual_is_small() {
        let field = CylindricalField::new(FieldKind::Pulsed { amplitude: vec![0.3], frequency: 0.5 }, 1, 1.0).unwrap();
        let rho0 = InitialDensity::bump(vec![0.0], 0.3).unwrap();
        let p = TransportProblem::new(rho0, field, gaussian_slice(), FlowConfig::rk4(1e-3).unwrap()).unwrap();
        let r = pde_residual(&p, 0.4, &[0.1], 1e-3, 1e-3).unwrap();
        assert!(r.abs() < 1e-4, "{r}");
    }

    #[test]
    fn evaluations_outside_reach_are_exactly_zero() {
        let field = CylindricalField::new(FieldKind::Constant(vec![0.5, 0.0]), 2, 1.0).unwrap();
        let m = Arc::new(ReferenceMeasure::Gaussian(GaussianMeasure::dirichlet(2).unwrap()));
        let w: Arc<dyn SliceDensity> = Arc::new(ExactSlice::new(m, 2, &[]).unwrap());
        let rho0 = InitialDensity::bump(vec![0.0, 0.0], 1.0 / 2f64.sqrt()).unwrap();
        assert!((rho0.support_radius() - 1.0).abs() < 1e-15);
        let p = TransportProblem::new(rho0, field, w, FlowConfig::rk4(1e-2).unwrap()).unwrap();
        assert!((p.support_radius() - 1.5).abs() < 1e-15);
        for k in 0..64 {
            let a = k as f64 * std::f64::consts::TAU / 64.0;
            for r in [1.5001, 2.0, 5.0] {
                let x = [r * a.cos(), r * a.sin()];
                for t in [0.0, 0.5, 1.0] {
                    assert_eq!(feynman_kac(&p, t, &x).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        let field = CylindricalField::new(FieldKind::Constant(vec![40.0]), 1, 1.0).unwrap();
        let rho0 = InitialDensity::bump(vec![0.0], 0.3).unwrap();
        let p = TransportProblem::new(rho0, field, gaussian_slice(), FlowConfig::rk4(1e-3).unwrap()).unwrap();
        match feynman_kac(&p, 1.0, &[40.0]) {
            Err(Error::RepresentationOverflow { t, x }) => {
                assert_eq!(t, 1.0);
                assert_eq!(x, vec![40.0]);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn kink_field_rejected() {
        let field = CylindricalField::new(FieldKind::Kink, 1, 1.0).unwrap();
        let rho0 = InitialDensity::bump(vec![0.0], 0.3).unwrap();
        assert!(TransportProblem::new(rho0, field, gaussian_slice(), FlowConfig::rk4(1e-3).unwrap()).is_err());
    }

    #[test]
    fn solve_table_and_csv() {
        let p = constant_problem(0.3, 1e-3);
        let pts = vec![vec![0.0], vec![0.2]];
        let sol = solve(p, &[0.0, 0.5], &pts).unwrap();
        assert_eq!(sol.values_at(1).len(), 2);
        assert!((sol.values_at(1)[1] - sol.rho(0.5, &[0.2]).unwrap()).abs() < 1e-12);
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x_1,rho\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn exact_and_ladder_weights_give_close_densities() {
        let base = GaussianMeasure::dirichlet(4).unwrap();
        let gibbs = GibbsMeasure::new(base, 1.0, 4.0, 20_000, 7).unwrap();
        let measure = Arc::new(ReferenceMeasure::Gibbs(gibbs));
        let tail = vec![0.0; 3];
        let exact: Arc<dyn SliceDensity> = Arc::new(ExactSlice::new(measure.clone(), 1, &tail).unwrap());
        let spec = LadderSpec::new(8.0, 16.0, LadderMode::Force).unwrap();
        let ladder: Arc<dyn SliceDensity> = Arc::new(LadderDensity::new(exact.clone(), spec, 3).unwrap());
        let g = NemytskiiField::new(Reaction::NegArctan, 1).unwrap().galerkin(1).unwrap();
        let field = CylindricalField::new(FieldKind::Nemytskii(g), 1, 1.0).unwrap();
        let rho0 = InitialDensity::bump(vec![0.0], 0.2).unwrap().normalized(exact.as_ref(), 1e-3).unwrap();
        let cfg = FlowConfig::rk4(1e-2).unwrap();
        let a = TransportProblem::new(rho0.clone(), field.clone(), exact.clone(), cfg).unwrap();
        let b = TransportProblem::new(rho0, field, ladder, cfg).unwrap();
        let r = a.support_radius();
        let n = 400;
        let mut diff = Vec::with_capacity(n);
        for i in 0..n {
            let x = -r + 2.0 * r * (i as f64 + 0.5) / n as f64;
            let da = feynman_kac(&a, 1.0, &[x]).unwrap();
            let db = feynman_kac(&b, 1.0, &[x]).unwrap();
            diff.push((da - db).abs() * exact.density(&[x]) * 2.0 * r);
        }
        let l1 = stats::mean(&diff);
        assert!(l1 < 1e-2, "{l1}");
    }
}
