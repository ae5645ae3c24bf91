//! The registry of named building blocks and the builders that turn config
//! specifications into library objects.

use std::fmt::Write as _;
use std::sync::Arc;

use ctlab::fields::{CylindricalField, FieldKind, NemytskiiField, Reaction};
use ctlab::functions::CylindricalFunction;
use ctlab::measures::{
    ExactSlice, GaussianMeasure, GibbsMeasure, LadderDensity, LadderMode, LadderSpec, ReferenceMeasure, SliceDensity,
};
use ctlab::rng::{self, domain};
use ctlab::spde::{PolynomialReaction, SpdeConfig, SpdeModel};
use ctlab::transport::{FlowConfig, InitialDensity, TransportProblem};
use serde::Serialize;

use crate::config::{FieldSpec, LadderConfig, MeasureSpec, ProblemSpec, ReactionSpec, SpdeSpec};
use crate::error::{RunError, RunResult};

/// One registry row.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub category: &'static str,
    pub name: String,
    /// `theory` for objects of the underlying model, `oracle` for cases with
    /// closed-form answers, `probe` for deliberately irregular inputs.
    pub origin: &'static str,
    pub description: String,
}

fn entry(
    category: &'static str,
    name: impl Into<String>,
    origin: &'static str,
    description: impl Into<String>,
) -> CatalogEntry {
    CatalogEntry { category, name: name.into(), origin, description: description.into() }
}

pub fn catalog() -> Vec<CatalogEntry> {
    let mut v = vec![
        entry(
            "measure",
            "gaussian(N)",
            "theory",
            "centred Gaussian with covariance (-2A)^-1 on the first N sine modes",
        ),
        entry("measure", "gibbs(alpha,p)", "theory", "Gaussian reweighted by exp(-alpha/p * int |x|^p), p even"),
        entry(
            "density",
            "bump",
            "theory",
            "smooth compactly supported bump on a box, normalised against the slice weight",
        ),
        entry("density", "plateau", "probe", "indicator-like plateau on a box (not differentiable)"),
        entry("density", "ladder(M,l)", "theory", "slice density clipped into [1/M, M] and mollified at scale 1/l"),
        entry("field", "zero", "oracle", "F = 0; the density is frozen"),
        entry("field", "constant", "oracle", "F = c; closed-form characteristics and density"),
        entry("field", "pulsed", "oracle", "F(t) = c cos(2 pi nu t); time-dependent, spatially constant"),
        entry("field", "linear", "oracle", "F_i = d_i x_i; unbounded, flow tests only"),
        entry("field", "rotation", "oracle", "F = s (x_2, -x_1); unbounded, flow tests only"),
        entry("field", "swirl", "theory", "F = s (x_2, -x_1) / (1 + |x|^2); bounded and divergence-free"),
        entry("field", "smoothed", "theory", "F_n = eps_n sin(x_n): a smoothing operator applied to a bounded field"),
        entry("field", "quadratic", "probe", "F = (x_1^2, 0, ...); unbounded"),
        entry(
            "field",
            "kink",
            "probe",
            "F = (min(|x_1|, 1), 0, ...); continuous only, rejected by the transport solver",
        ),
    ];
    for name in Reaction::catalog() {
        v.push(entry(
            "field",
            format!("nemytskii:{name}"),
            "theory",
            "Galerkin truncation of x -> f(x(.)) on L^2(0,1)",
        ));
    }
    v.extend([
        entry("test function", "constant", "oracle", "u = c"),
        entry("test function", "damped_coordinate", "theory", "u = x_i exp(-x_i^2/2)"),
        entry("test function", "gaussian_product", "theory", "u = exp(-x_i^2) x_j"),
        entry("test function", "sine", "theory", "u = sin(x_i)"),
        entry("test function", "tilted_gaussian", "theory", "u = exp(-|x - c|^2/2)(1 + x_1)"),
        entry("test function", "soft_clip", "oracle", "u = s tanh(x_i / s), a bounded surrogate of x_i"),
        entry("reaction", "zero", "oracle", "p = 0; the SPDE reduces to Ornstein-Uhlenbeck"),
        entry("reaction", "cubic", "theory", "p(r) = -r^3 + c1 r with c1 <= 0"),
        entry(
            "reaction",
            "polynomial",
            "theory",
            "decreasing polynomial of odd degree >= 3 with negative leading coefficient",
        ),
    ]);
    v
}

/// The registry as an aligned table.
pub fn render_catalog() -> String {
    let rows = catalog();
    let cw = rows.iter().map(|r| r.category.len()).max().unwrap_or(0);
    let nw = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<cw$}  {:<nw$}  {:<6}  description", "category", "name", "origin");
    for r in rows {
        let _ = writeln!(out, "{:<cw$}  {:<nw$}  {:<6}  {}", r.category, r.name, r.origin, r.description);
    }
    out
}

/// Short label for CSV columns and check names.
pub fn function_label(u: &CylindricalFunction) -> String {
    match u {
        CylindricalFunction::Constant { value } => format!("constant({value})"),
        CylindricalFunction::DampedCoordinate { index } => format!("damped_coordinate({index})"),
        CylindricalFunction::GaussianProduct { gauss, linear } => format!("gaussian_product({gauss};{linear})"),
        CylindricalFunction::Sine { index } => format!("sine({index})"),
        CylindricalFunction::TiltedGaussian { center } => format!("tilted_gaussian(dim={})", center.len()),
        CylindricalFunction::SoftClip { index, scale } => format!("soft_clip({index};{scale})"),
    }
}

pub fn build_measure(spec: &MeasureSpec, seed: u64, path: &str) -> RunResult<Arc<ReferenceMeasure>> {
    let base = GaussianMeasure::dirichlet(spec.n_modes()).map_err(|e| RunError::at(format!("{path}.n_modes"), e))?;
    Ok(Arc::new(match spec {
        MeasureSpec::Gaussian { .. } => ReferenceMeasure::Gaussian(base),
        MeasureSpec::Gibbs { alpha, p, normalizer_samples, .. } => {
            let s = rng::child_seed(seed, domain::NORMALIZER, 0);
            ReferenceMeasure::Gibbs(
                GibbsMeasure::new(base, *alpha, *p, *normalizer_samples, s).map_err(|e| RunError::at(path, e))?,
            )
        }
    }))
}

impl FieldSpec {
    /// Dimension implied by the coefficient vector, if the kind carries one.
    pub fn natural_dim(&self) -> Option<usize> {
        match self {
            FieldSpec::Constant { value } => Some(value.len()),
            FieldSpec::Pulsed { amplitude, .. } => Some(amplitude.len()),
            FieldSpec::Linear { diagonal } => Some(diagonal.len()),
            FieldSpec::Smoothed { eps } => Some(eps.len()),
            _ => None,
        }
    }
}

pub fn build_field(spec: &FieldSpec, dim: usize, horizon: f64, path: &str) -> RunResult<CylindricalField> {
    let kind = match spec {
        FieldSpec::Zero => FieldKind::Zero,
        FieldSpec::Constant { value } => FieldKind::Constant(value.clone()),
        FieldSpec::Pulsed { amplitude, frequency } => {
            FieldKind::Pulsed { amplitude: amplitude.clone(), frequency: *frequency }
        }
        FieldSpec::Linear { diagonal } => FieldKind::Linear(diagonal.clone()),
        FieldSpec::Rotation { scale } => FieldKind::Rotation { scale: *scale },
        FieldSpec::Swirl { scale } => FieldKind::Swirl { scale: *scale },
        FieldSpec::Quadratic => FieldKind::Quadratic,
        FieldSpec::Kink => FieldKind::Kink,
        FieldSpec::Smoothed { eps } => FieldKind::Smoothed { eps: eps.clone() },
        FieldSpec::Nemytskii { reaction } => {
            let r = Reaction::from_name(reaction).map_err(|e| RunError::at(format!("{path}.reaction"), e))?;
            let g = NemytskiiField::new(r, dim).and_then(|f| f.galerkin(dim)).map_err(|e| RunError::at(path, e))?;
            FieldKind::Nemytskii(g)
        }
    };
    CylindricalField::new(kind, dim, horizon).map_err(|e| RunError::at(path, e))
}

pub fn ladder_weight(
    exact: Arc<ExactSlice>,
    ladder: &LadderConfig,
    seed: u64,
    path: &str,
) -> RunResult<Arc<dyn SliceDensity>> {
    let spec = LadderSpec::new(ladder.clip, ladder.scale, LadderMode::Force).map_err(|e| RunError::at(path, e))?;
    let s = rng::child_seed(seed, domain::MOLLIFIER, 0);
    Ok(Arc::new(LadderDensity::new(exact, spec, s).map_err(|e| RunError::at(path, e))?))
}

/// A transport problem together with the exact slice behind its weight.
pub struct BuiltProblem {
    pub problem: TransportProblem,
    pub exact: Arc<ExactSlice>,
    pub measure: Arc<ReferenceMeasure>,
}

pub fn exact_slice(
    measure: Arc<ReferenceMeasure>,
    split: Option<usize>,
    tail: Option<&[f64]>,
    path: &str,
) -> RunResult<Arc<ExactSlice>> {
    let n = measure.n_modes();
    let split = split.unwrap_or(n);
    if split == 0 || split > n {
        return Err(RunError::invalid(format!("{path}.split"), format!("must lie in 1..={n}")));
    }
    let zeros = vec![0.0; n - split];
    let tail = tail.unwrap_or(&zeros);
    ExactSlice::new(measure, split, tail).map(Arc::new).map_err(|e| RunError::at(format!("{path}.tail"), e))
}

/// Builds the problem with an explicit weight override (used by ladder
/// comparisons).
pub fn build_problem_with(
    spec: &ProblemSpec,
    ladder: Option<&LadderConfig>,
    seed: u64,
    path: &str,
) -> RunResult<BuiltProblem> {
    FlowConfig::new(spec.integrator, spec.dt).map_err(|e| RunError::at(format!("{path}.dt"), e))?;
    if !(spec.horizon > 0.0 && spec.horizon.is_finite()) {
        return Err(RunError::invalid(format!("{path}.horizon"), "must be positive"));
    }
    let measure = build_measure(&spec.measure, seed, &format!("{path}.measure"))?;
    let exact = exact_slice(measure.clone(), spec.split, spec.tail.as_deref(), path)?;
    let dim = exact.dim();
    let weight: Arc<dyn SliceDensity> = match ladder {
        Some(l) => ladder_weight(exact.clone(), l, seed, &format!("{path}.ladder"))?,
        None => exact.clone(),
    };
    let field = build_field(&spec.field, dim, spec.horizon, &format!("{path}.field"))?;
    let ip = format!("{path}.initial");
    let init = &spec.initial;
    let mut rho0 =
        InitialDensity::new(init.center.clone(), init.radius, 1.0, init.profile).map_err(|e| RunError::at(&ip, e))?;
    if rho0.dim() != dim {
        return Err(RunError::invalid(format!("{ip}.center"), format!("must have {dim} entries")));
    }
    if init.normalize {
        rho0 = rho0.normalized(weight.as_ref(), init.normalize_spacing).map_err(|e| RunError::at(&ip, e))?;
    }
    let flow = FlowConfig::new(spec.integrator, spec.dt)
        .map_err(|e| RunError::at(format!("{path}.dt"), e))?
        .with_exponent(spec.exponent);
    let problem = TransportProblem::new(rho0, field, weight, flow).map_err(|e| RunError::at(path, e))?;
    Ok(BuiltProblem { problem, exact, measure })
}

pub fn build_problem(spec: &ProblemSpec, seed: u64, path: &str) -> RunResult<BuiltProblem> {
    build_problem_with(spec, spec.ladder.as_ref(), seed, path)
}

pub fn build_reaction(spec: &ReactionSpec, path: &str) -> RunResult<PolynomialReaction> {
    match spec {
        ReactionSpec::Zero => Ok(PolynomialReaction::zero()),
        ReactionSpec::Cubic { c1 } => PolynomialReaction::cubic(*c1),
        ReactionSpec::Polynomial { coeffs } => PolynomialReaction::new(coeffs.clone()),
    }
    .map_err(|e| RunError::at(path, e))
}

pub fn build_spde(spec: &SpdeSpec, reaction: &ReactionSpec, yosida_alpha: f64, path: &str) -> RunResult<SpdeModel> {
    let reaction = build_reaction(reaction, &format!("{path}.reaction"))?;
    let config = SpdeConfig {
        n_modes: spec.n_modes,
        dt: spec.dt,
        horizon: spec.horizon,
        noise: spec.noise.clone().unwrap_or_else(|| vec![1.0; spec.n_modes]),
        reaction,
        yosida_alpha,
        noiseless: false,
    };
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(RunError::invalid(format!("{path}.dt"), "must be positive"));
    }
    SpdeModel::new(config).map_err(|e| RunError::at(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lists_every_reaction_and_the_gibbs_family() {
        let names: Vec<String> = catalog().into_iter().map(|e| e.name).collect();
        assert!(names.iter().any(|n| n == "gibbs(alpha,p)"));
        for r in Reaction::catalog() {
            assert!(names.contains(&format!("nemytskii:{r}")), "missing {r}");
        }
        assert!(render_catalog().contains("cubic"));
    }

    #[test]
    fn field_dimension_is_checked_against_the_slice() {
        let spec = FieldSpec::Constant { value: vec![0.1, 0.2] };
        assert_eq!(spec.natural_dim(), Some(2));
        assert!(build_field(&spec, 2, 1.0, "f").is_ok());
        match build_field(&spec, 1, 1.0, "f") {
            Err(RunError::Invalid { path, .. }) => assert!(path.starts_with('f')),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_reaction_is_a_validation_error() {
        let spec = FieldSpec::Nemytskii { reaction: "tanh".into() };
        let err = build_field(&spec, 1, 1.0, "p.field").unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_VALIDATION);
    }

    #[test]
    fn gibbs_builder_is_deterministic() {
        let spec = MeasureSpec::Gibbs { n_modes: 2, alpha: 1.0, p: 4.0, normalizer_samples: 2000 };
        let a = build_measure(&spec, 3, "m").unwrap();
        let b = build_measure(&spec, 3, "m").unwrap();
        match (a.as_ref(), b.as_ref()) {
            (ReferenceMeasure::Gibbs(x), ReferenceMeasure::Gibbs(y)) => assert_eq!(x.normalizer(), y.normalizer()),
            _ => panic!("expected Gibbs measures"),
        }
    }
}
