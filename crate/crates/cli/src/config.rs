//! Declarative experiment configuration, one TOML file per experiment.
//!
//! The top level names the experiment `kind`, the root `seed`, and optionally
//! the worker count and output directory; the parameters live in the table
//! named after the kind (for example `[transport-solve]`).

use std::path::{Path, PathBuf};

use ctlab::functions::{CylindricalFunction, SpaceTimeTest};
use ctlab::spde::{CommutatorSpec, InvariantSpec};
use ctlab::transport::{ExponentRule, Integrator, Profile};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TransportSolve,
    VerifySuite,
    IbpCheck,
    GibbsSample,
    SpdeInvariant,
    CommutatorCurve,
    BdgCheck,
    EntropyAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::TransportSolve,
        ExperimentKind::VerifySuite,
        ExperimentKind::IbpCheck,
        ExperimentKind::GibbsSample,
        ExperimentKind::SpdeInvariant,
        ExperimentKind::CommutatorCurve,
        ExperimentKind::BdgCheck,
        ExperimentKind::EntropyAudit,
    ];

    /// The config name, which is also the parameter table name.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TransportSolve => "transport-solve",
            ExperimentKind::VerifySuite => "verify-suite",
            ExperimentKind::IbpCheck => "ibp-check",
            ExperimentKind::GibbsSample => "gibbs-sample",
            ExperimentKind::SpdeInvariant => "spde-invariant",
            ExperimentKind::CommutatorCurve => "commutator-curve",
            ExperimentKind::BdgCheck => "bdg-check",
            ExperimentKind::EntropyAudit => "entropy-audit",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_solve: Option<TransportSolveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_suite: Option<VerifySuiteParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ibp_check: Option<IbpCheckParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gibbs_sample: Option<GibbsSampleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spde_invariant: Option<SpdeInvariantParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutator_curve: Option<CommutatorCurveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bdg_check: Option<BdgCheckParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_audit: Option<EntropyAuditParams>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| RunError::Parse(e.to_string()))?;
        config.check_blocks()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    /// Exactly the parameter table named by `kind` must be present.
    fn check_blocks(&self) -> Result<(), RunError> {
        let present = [
            (ExperimentKind::TransportSolve, self.transport_solve.is_some()),
            (ExperimentKind::VerifySuite, self.verify_suite.is_some()),
            (ExperimentKind::IbpCheck, self.ibp_check.is_some()),
            (ExperimentKind::GibbsSample, self.gibbs_sample.is_some()),
            (ExperimentKind::SpdeInvariant, self.spde_invariant.is_some()),
            (ExperimentKind::CommutatorCurve, self.commutator_curve.is_some()),
            (ExperimentKind::BdgCheck, self.bdg_check.is_some()),
            (ExperimentKind::EntropyAudit, self.entropy_audit.is_some()),
        ];
        for (kind, is_present) in present {
            if kind == self.kind && !is_present {
                return Err(RunError::invalid(kind.name(), "missing parameter table for this kind"));
            }
            if kind != self.kind && is_present {
                return Err(RunError::invalid(
                    kind.name(),
                    format!("table does not belong to a `{}` experiment", self.kind.name()),
                ));
            }
        }
        if self.workers == Some(0) {
            return Err(RunError::invalid("workers", "must be ≥ 1"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the worker count and
    /// output directory (which do not affect numeric results).
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.workers = None;
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

// ---------------------------------------------------------------------------
// Shared building blocks

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Centred Gaussian with covariance `(-2A)^{-1}`.
    Gaussian { n_modes: usize },
    /// `Z^{-1} exp(-α/p ∫|x|^p) γ`.
    Gibbs {
        n_modes: usize,
        alpha: f64,
        p: f64,
        #[serde(default = "default_normalizer_samples")]
        normalizer_samples: usize,
    },
}

fn default_normalizer_samples() -> usize {
    20_000
}

impl MeasureSpec {
    pub fn n_modes(&self) -> usize {
        match self {
            MeasureSpec::Gaussian { n_modes } | MeasureSpec::Gibbs { n_modes, .. } => *n_modes,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MeasureSpec::Gaussian { n_modes } => format!("gaussian(N={n_modes})"),
            MeasureSpec::Gibbs { n_modes, alpha, p, .. } => format!("gibbs(alpha={alpha},p={p},N={n_modes})"),
        }
    }
}

/// Clip level `M` and mollifier scale `l` of the weight ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub clip: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Constant {
        value: Vec<f64>,
    },
    Pulsed {
        amplitude: Vec<f64>,
        frequency: f64,
    },
    Linear {
        diagonal: Vec<f64>,
    },
    Rotation {
        scale: f64,
    },
    Swirl {
        scale: f64,
    },
    Quadratic,
    Kink,
    Smoothed {
        eps: Vec<f64>,
    },
    /// Galerkin truncation of the Nemytskii field of a catalog reaction.
    Nemytskii {
        reaction: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    /// Rescale to unit mass against the slice weight.
    #[serde(default = "yes")]
    pub normalize: bool,
    #[serde(default = "default_fine_spacing")]
    pub normalize_spacing: f64,
}

fn default_profile() -> Profile {
    Profile::Bump
}

fn yes() -> bool {
    true
}

fn default_fine_spacing() -> f64 {
    1e-3
}

fn one() -> f64 {
    1.0
}

/// A transport problem on the slice `{y = tail}` of a reference measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub measure: MeasureSpec,
    /// Number of leading modes carrying the dynamics (default: all).
    #[serde(default)]
    pub split: Option<usize>,
    /// Tail coordinates of the slice (default: zeros).
    #[serde(default)]
    pub tail: Option<Vec<f64>>,
    /// Replace the exact slice density by its clip/mollify ladder.
    #[serde(default)]
    pub ladder: Option<LadderConfig>,
    pub field: FieldSpec,
    pub initial: InitialSpec,
    pub dt: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub exponent: ExponentRule,
}

// ---------------------------------------------------------------------------
// transport-solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSolveParams {
    pub problem: ProblemSpec,
    pub times: Vec<f64>,
    pub grid: GridSpec,
    #[serde(default)]
    pub mass: MassSpec,
    #[serde(default)]
    pub residual: Option<ResidualSpec>,
}

/// Output lattice centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub spacing: f64,
    /// Half-width of the box (default: the support radius).
    #[serde(default)]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassSpec {
    #[serde(default = "default_fine_spacing")]
    pub spacing: f64,
    #[serde(default = "default_mass_tolerance")]
    pub tolerance: f64,
}

impl Default for MassSpec {
    fn default() -> Self {
        MassSpec { spacing: default_fine_spacing(), tolerance: default_mass_tolerance() }
    }
}

fn default_mass_tolerance() -> f64 {
    1e-6
}

/// Pointwise PDE residual under step refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSpec {
    pub t: f64,
    pub x: Vec<f64>,
    /// Difference steps `h_t = h_x`, coarse to fine.
    pub steps: Vec<f64>,
    #[serde(default = "two")]
    pub expected_order: f64,
    #[serde(default = "default_order_tolerance")]
    pub order_tolerance: f64,
    #[serde(default = "default_weak_tolerance")]
    pub max_residual: f64,
}

fn two() -> f64 {
    2.0
}

fn default_order_tolerance() -> f64 {
    0.3
}

fn default_weak_tolerance() -> f64 {
    1e-4
}

// ---------------------------------------------------------------------------
// verify-suite

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySuiteParams {
    #[serde(default)]
    pub cases: Vec<SuiteCase>,
    #[serde(default)]
    pub uniqueness: Vec<UniquenessCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteCase {
    pub name: String,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub mass_times: Vec<f64>,
    #[serde(default)]
    pub mass: MassSpec,
    #[serde(default)]
    pub tests: Vec<SpaceTimeTest>,
    #[serde(default)]
    pub weak: WeakSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakSpec {
    #[serde(default = "default_fine_spacing")]
    pub spacing: f64,
    #[serde(default = "default_fine_spacing")]
    pub time_step: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_weak_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

impl Default for WeakSpec {
    fn default() -> Self {
        WeakSpec {
            spacing: default_fine_spacing(),
            time_step: default_fine_spacing(),
            levels: default_levels(),
            tolerance: default_weak_tolerance(),
            min_order: default_min_order(),
        }
    }
}

fn default_levels() -> usize {
    3
}

fn default_min_order() -> f64 {
    1.7
}

/// Solutions built with different weight ladders, compared in sampled `L¹`
/// against the exact slice weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessCase {
    pub name: String,
    pub problem: ProblemSpec,
    pub ladders: Vec<LadderConfig>,
    pub times: Vec<f64>,
    pub samples: usize,
    #[serde(default = "default_uniqueness_tolerance")]
    pub tolerance: f64,
}

fn default_uniqueness_tolerance() -> f64 {
    1e-2
}

// ---------------------------------------------------------------------------
// ibp-check and gibbs-sample

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbpCheckParams {
    pub measures: Vec<MeasureSpec>,
    pub pairs: Vec<IbpPair>,
    #[serde(default = "default_ibp_samples")]
    pub samples: usize,
    /// Pass iff `|residual| ≤ max_z · stderr`.
    #[serde(default = "default_max_z")]
    pub max_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbpPair {
    pub u: CylindricalFunction,
    /// Direction `e_h` (1-based).
    pub h: usize,
}

fn default_ibp_samples() -> usize {
    100_000
}

fn default_max_z() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSampleParams {
    pub measure: MeasureSpec,
    pub count: usize,
}

// ---------------------------------------------------------------------------
// SPDE kinds

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSpec {
    #[default]
    Zero,
    /// `p(r) = -r³ + c₁ r`, `c₁ ≤ 0`.
    Cubic {
        c1: f64,
    },
    /// Coefficients in increasing degree.
    Polynomial {
        coeffs: Vec<f64>,
    },
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeSpec {
    pub n_modes: usize,
    pub dt: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub reaction: ReactionSpec,
    #[serde(default)]
    pub yosida_alpha: f64,
    /// Diagonal of `B` (default: identity).
    #[serde(default)]
    pub noise: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeInvariantParams {
    pub model: SpdeSpec,
    pub invariant: InvariantSpec,
    /// Analytic Ornstein–Uhlenbeck comparisons (zero reaction, `B = I`).
    #[serde(default)]
    pub ou: Option<OuOracleSpec>,
    #[serde(default)]
    pub contraction: Option<ContractionSpec>,
    #[serde(default)]
    pub yosida: Option<YosidaSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuOracleSpec {
    pub paths: usize,
    /// Time of the semigroup and gradient comparisons.
    pub t: f64,
    /// Starting point `x₁ e₁`.
    #[serde(default = "half")]
    pub x1: f64,
    /// Number of leading modes whose invariant mean and variance are checked.
    #[serde(default = "default_modes_checked")]
    pub modes_checked: usize,
    #[serde(default = "default_max_z")]
    pub max_z: f64,
}

fn half() -> f64 {
    0.5
}

fn default_modes_checked() -> usize {
    4
}

/// `|η^h(t)| ≤ |h|` along paths of a dissipative model with the same modes,
/// step and horizon as the main model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionSpec {
    pub reaction: ReactionSpec,
    #[serde(default)]
    pub yosida_alpha: f64,
    #[serde(default = "default_contraction_paths")]
    pub paths: usize,
    /// Starting point (default `e₁`).
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_contraction_slack")]
    pub slack: f64,
}

fn default_contraction_paths() -> usize {
    100
}

fn default_contraction_slack() -> f64 {
    1e-8
}

/// `p_α(r) = p(J_α(r))` on a grid of `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YosidaSpec {
    pub reaction: ReactionSpec,
    pub alphas: Vec<f64>,
    #[serde(default = "default_yosida_range")]
    pub range: f64,
    #[serde(default = "default_yosida_points")]
    pub points: usize,
    #[serde(default = "default_yosida_tolerance")]
    pub tolerance: f64,
}

fn default_yosida_range() -> f64 {
    10.0
}

fn default_yosida_points() -> usize {
    1001
}

fn default_yosida_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorCurveParams {
    pub model: SpdeSpec,
    pub u: CylindricalFunction,
    pub field: FieldSpec,
    /// Dimension for fields that do not carry a coefficient vector.
    #[serde(default)]
    pub field_dim: Option<usize>,
    /// Strictly decreasing `ε` grid.
    pub eps: Vec<f64>,
    #[serde(default)]
    pub budget: CommutatorSpec,
    pub invariant: InvariantSpec,
    #[serde(default)]
    pub v_norm: Option<VNormSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VNormSpec {
    pub phi: CylindricalFunction,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    Constant { value: f64, steps: usize },
    Steps { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BdgCheckParams {
    #[serde(default = "default_bdg_p")]
    pub p: f64,
    pub integrand: IntegrandSpec,
    #[serde(default = "one")]
    pub horizon: f64,
    pub samples: usize,
    /// Required margin `c_p / ratio`.
    #[serde(default = "default_min_factor")]
    pub min_factor: f64,
}

fn default_bdg_p() -> f64 {
    4.0
}

fn default_min_factor() -> f64 {
    1e4
}

// ---------------------------------------------------------------------------
// entropy-audit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyAuditParams {
    #[serde(default)]
    pub cases: Vec<EntropyCase>,
    #[serde(default)]
    pub jensen: Vec<JensenCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyCase {
    pub name: String,
    pub problem: ProblemSpec,
    pub times: Vec<f64>,
    /// `δ` (default: the recipe `min_i c_i / (N(‖f_i‖_∞ + 1))`).
    #[serde(default)]
    pub delta: Option<f64>,
    /// Lattice spacing for the entropy integrals.
    #[serde(default = "default_fine_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub cf: CfSpec,
}

/// Quadrature settings for `C_F(δ,y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfSpec {
    #[serde(default = "default_cf_spacing")]
    pub spacing: f64,
    #[serde(default = "default_cf_time_steps")]
    pub time_steps: usize,
    #[serde(default = "default_cf_mc_points")]
    pub mc_points: usize,
    /// `(M, l)` pairs (default: the problem's ladder, or the full grid).
    #[serde(default)]
    pub ladders: Option<Vec<LadderConfig>>,
}

impl Default for CfSpec {
    fn default() -> Self {
        CfSpec {
            spacing: default_cf_spacing(),
            time_steps: default_cf_time_steps(),
            mc_points: default_cf_mc_points(),
            ladders: None,
        }
    }
}

fn default_cf_spacing() -> f64 {
    1e-2
}

fn default_cf_time_steps() -> usize {
    8
}

fn default_cf_mc_points() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JensenCase {
    pub name: String,
    pub measure: MeasureSpec,
    pub split: usize,
    #[serde(default)]
    pub tail: Option<Vec<f64>>,
    pub clips: Vec<f64>,
    pub scales: Vec<f64>,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub half_width: f64,
    #[serde(default = "default_mass_tolerance")]
    pub tolerance: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "transport-solve"
seed = 5

[transport-solve]
times = [0.0, 0.5]
grid = { spacing = 0.05 }

[transport-solve.problem]
measure = { kind = "gaussian", n_modes = 1 }
field = { kind = "zero" }
initial = { center = [0.0], radius = 0.3 }
dt = 0.01
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.kind, ExperimentKind::TransportSolve);
        let p = c.transport_solve.unwrap();
        assert_eq!(p.problem.horizon, 1.0);
        assert!(p.problem.initial.normalize);
        assert_eq!(p.mass.tolerance, 1e-6);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("dt = 0.01", "dt = 0.01\nstep = 2");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(RunError::Parse(_))));
    }

    #[test]
    fn table_must_match_kind() {
        let text = MINIMAL.replace("kind = \"transport-solve\"", "kind = \"bdg-check\"");
        match ExperimentConfig::from_toml(&text) {
            Err(RunError::Invalid { path, .. }) => assert_eq!(path, "transport-solve"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_workers_rejected() {
        let text = MINIMAL.replace("seed = 5", "seed = 5\nworkers = 0");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(RunError::Invalid { .. })));
    }

    #[test]
    fn hash_ignores_workers_and_output_only() {
        let base = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let mut other = base.clone();
        other.workers = Some(4);
        other.output = Some("elsewhere".into());
        assert_eq!(base.hash(), other.hash());
        let reseeded = ExperimentConfig::from_toml(&MINIMAL.replace("seed = 5", "seed = 6")).unwrap();
        assert_ne!(base.hash(), reseeded.hash());
        assert_eq!(base.hash().len(), 64);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ExperimentKind::ALL {
            let text = format!("kind = \"{}\"", kind.name());
            #[derive(Deserialize)]
            struct K {
                kind: ExperimentKind,
            }
            assert_eq!(toml::from_str::<K>(&text).unwrap().kind, kind);
        }
    }
}
