//! Mass conservation, entropy, and the Gronwall entropy bound
//!
//! `∫ρ(t)(ln ρ(t) - 1)Ψ² ≤ e^{t/δ}[∫ρ_0|ln ρ_0 - 1|Ψ² + C_F(δ,y)
//!   + (t/δ)|ln δ| ∫ρ_0Ψ² + (t/M)|K_{R+1}| + t∫Ψ²]`.

use serde::{Deserialize, Serialize};

use super::{entropy_density, LatticeTable, QuadratureSpec, Verdict, VerificationReport};
use crate::error::{require_positive, Error, Result};
use crate::measures::SliceDensity;
use crate::stats;
use crate::transport::{Lattice, TransportProblem};

/// Relative mass drift `|∫ρ(t)Ψ² - ∫ρ_0Ψ²| / ∫ρ_0Ψ²` at each time.
pub fn mass_history(
    problem: &TransportProblem,
    times: &[f64],
    spec: &QuadratureSpec,
    tolerance: f64,
) -> Result<Vec<VerificationReport>> {
    let mut all = Vec::with_capacity(times.len() + 1);
    all.push(0.0);
    all.extend_from_slice(times);
    let table = LatticeTable::build(problem, &all, spec)?;
    let initial = table.integrate(0, |_, rho| rho);
    if !(initial > 0.0) {
        return Err(Error::InfeasibleInput("initial mass is zero".into()));
    }
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mass = table.integrate(i + 1, |_, rho| rho);
            VerificationReport::new(format!("mass t={t}"), (mass - initial) / initial, 0.0, tolerance)
                .with_meta("t", t)
                .with_meta("mass", mass)
                .with_meta("initial_mass", initial)
                .with_meta("lattice_points", table.points.len())
        })
        .collect())
}

/// Relative mass drift at a single time.
pub fn mass_conservation(
    problem: &TransportProblem,
    t: f64,
    spec: &QuadratureSpec,
    tolerance: f64,
) -> Result<VerificationReport> {
    Ok(mass_history(problem, &[t], spec, tolerance)?.remove(0))
}

/// `∫ρ(t)(ln ρ(t) - 1)Ψ² dx` on the support lattice.
pub fn entropy(problem: &TransportProblem, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    let table = LatticeTable::build(problem, &[t], spec)?;
    Ok(table.integrate(0, |_, rho| entropy_density(rho)))
}

/// `∫ w dx` on a lattice of the given spacing covering `center ± half_width`.
pub fn slice_integral(weight: &dyn SliceDensity, center: &[f64], half_width: f64, spacing: f64) -> Result<f64> {
    require_positive("half_width", half_width)?;
    require_positive("spacing", spacing)?;
    if center.len() != weight.dim() {
        return Err(Error::InvalidData("centre and weight dimensions differ".into()));
    }
    let lattice = Lattice::around(center, half_width, spacing);
    let terms: Vec<f64> = lattice.points().map(|x| weight.density(&x)).collect();
    Ok(lattice.cell_volume() * stats::sum(&terms))
}

/// Lebesgue measure of the `n`-ball of radius `r`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = V_{n-2} 2π/n (unit radius).
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        v[k % 2] *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v[n % 2] * r.powi(n as i32)
}

/// Data for the right-hand side that does not come from the solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBoundInputs {
    pub delta: f64,
    /// `C_F(δ,y)` at the slice's tail point.
    pub cf_delta: f64,
    /// Clip level `M` of the weight, `None` for the exact slice density.
    pub clip: Option<f64>,
    /// `∫Ψ²(x,y) dx` of the exact (unclipped) slice over `ℝ^N`.
    pub full_weight_integral: f64,
}

/// Both sides of the bound, term by term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBoundTerms {
    pub t: f64,
    pub lhs: f64,
    pub initial_entropy: f64,
    pub cf_delta: f64,
    pub log_delta_term: f64,
    pub clip_term: f64,
    pub weight_term: f64,
    pub rhs: f64,
    /// The right side with `t∫Ψ²` replaced by `t∫_{K_R}Ψ²_{M,l}` (informational).
    pub sharper_rhs: f64,
}

impl EntropyBoundTerms {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Evaluates both sides at each time; a violated inequality is a
/// theorem-violation error.
pub fn entropy_bound_check(
    problem: &TransportProblem,
    times: &[f64],
    inputs: &EntropyBoundInputs,
    spec: &QuadratureSpec,
) -> Result<(VerificationReport, Vec<EntropyBoundTerms>)> {
    require_positive("delta", inputs.delta)?;
    if !(inputs.cf_delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("C_F(δ,y) must be ≥ 0, got {}", inputs.cf_delta)));
    }
    let mut all = vec![0.0];
    all.extend_from_slice(times);
    let table = LatticeTable::build(problem, &all, spec)?;
    let initial_entropy = table.integrate(0, |_, r| if r > 0.0 { r * (r.ln() - 1.0).abs() } else { 0.0 });
    let mass = table.integrate(0, |_, r| r);
    let n = problem.dim();
    let radius = problem.support_radius();
    let ball = ball_volume(n, radius + 1.0);
    // ∫_{K_R} Ψ²_{M,l} on an origin-centred lattice.
    let k_r = {
        let lattice = Lattice::around(&vec![0.0; n], radius, spec.spacing);
        let terms: Vec<f64> = lattice
            .points()
            .filter(|x| x.iter().map(|a| a * a).sum::<f64>() <= radius * radius)
            .map(|x| problem.weight.density(&x))
            .collect();
        lattice.cell_volume() * stats::sum(&terms)
    };
    let delta = inputs.delta;
    let mut terms = Vec::with_capacity(times.len());
    let mut worst = f64::INFINITY;
    for (i, &t) in times.iter().enumerate() {
        let lhs = table.integrate(i + 1, |_, r| entropy_density(r));
        let log_delta_term = t / delta * delta.ln().abs() * mass;
        let clip_term = inputs.clip.map_or(0.0, |m| t / m * ball);
        let weight_term = t * inputs.full_weight_integral;
        let growth = (t / delta).exp();
        let common = initial_entropy + inputs.cf_delta + log_delta_term;
        let rhs = growth * (common + clip_term + weight_term);
        let sharper_rhs = growth * (common + t * k_r);
        let record = EntropyBoundTerms {
            t,
            lhs,
            initial_entropy,
            cf_delta: inputs.cf_delta,
            log_delta_term,
            clip_term,
            weight_term,
            rhs,
            sharper_rhs,
        };
        worst = worst.min(record.slack());
        terms.push(record);
    }
    if let Some(bad) = terms.iter().find(|r| !(r.lhs <= r.rhs)) {
        return Err(Error::TheoremViolation(format!(
            "entropy bound fails at t = {}: {} > {}",
            bad.t, bad.lhs, bad.rhs
        )));
    }
    // The residual is the worst `lhs - rhs`, negative whenever the bound holds.
    let mut report = VerificationReport::new("entropy bound", -worst, 0.0, 0.0).with_meta("min_slack", worst);
    report.verdict = Verdict::Pass;
    let report = report.with_meta("terms", &terms);
    Ok((report, terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::CylindricalField;
    use crate::fields::FieldKind;
    use crate::transport::{InitialDensity, Profile};
    use crate::verify::fixtures;

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-15);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-15);
        assert!((ball_volume(3, 1.0) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((ball_volume(4, 1.0) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn mass_is_conserved_on_the_oracle_case() {
        let p = fixtures::constant_1d(0.3, 1e-3);
        let spec = QuadratureSpec::new(1e-3, 1e-3).unwrap();
        for r in mass_history(&p, &[0.0, 0.5, 1.0], &spec, 1e-6).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
        let r0 = mass_conservation(&p, 0.0, &spec, 1e-6).unwrap();
        assert_eq!(r0.residual, 0.0);
    }

    #[test]
    fn enlarging_the_lattice_changes_nothing() {
        let p = fixtures::constant_1d(0.3, 1e-3);
        let spec = QuadratureSpec::new(1e-3, 1e-3).unwrap();
        let a = mass_conservation(&p, 0.5, &spec, 1e-6).unwrap();
        let b = mass_conservation(&p, 0.5, &spec.with_margin(0.7), 1e-6).unwrap();
        assert_eq!(a.residual, b.residual);
        assert_eq!(a.metadata["mass"], b.metadata["mass"]);
    }

    #[test]
    fn plateau_entropy_has_closed_form() {
        let w = fixtures::gaussian_slice(1);
        let field = CylindricalField::new(FieldKind::Zero, 1, 1.0).unwrap();
        let h = 1e-3;
        let rho0 =
            InitialDensity::new(vec![0.05], 0.2, 1.0, Profile::Plateau).unwrap().normalized(w.as_ref(), h).unwrap();
        let c = rho0.scale;
        let mut p = fixtures::constant_1d(0.0, 1e-3);
        p.rho0 = rho0;
        p.field = field;
        let spec = QuadratureSpec::new(h, 1e-3).unwrap();
        let e0 = entropy(&p, 0.0, &spec).unwrap();
        assert!((e0 - (c.ln() - 1.0)).abs() < 1e-12, "{e0} vs {}", c.ln() - 1.0);
        let e1 = entropy(&p, 1.0, &spec).unwrap();
        assert!((e1 - e0).abs() < 1e-8);
    }

    #[test]
    fn entropy_is_bounded_below_by_minus_weight_mass() {
        let p = fixtures::constant_1d(0.3, 1e-3);
        let spec = QuadratureSpec::new(1e-3, 1e-3).unwrap();
        let lattice = spec.lattice(&p).unwrap();
        let weight_mass: f64 = lattice.cell_volume() * lattice.points().map(|x| p.weight.density(&x)).sum::<f64>();
        for t in [0.0, 0.5, 1.0] {
            assert!(entropy(&p, t, &spec).unwrap() >= -weight_mass);
        }
    }

    #[test]
    fn gronwall_bound_holds_and_grows_in_time() {
        let slice = fixtures::gibbs_slice();
        let p = fixtures::arctan_1d(slice.clone(), 1e-3);
        let spec = QuadratureSpec::new(1e-3, 1e-3).unwrap();
        let full = slice_integral(slice.as_ref(), &[0.0], 3.0, 1e-3).unwrap();
        let inputs = EntropyBoundInputs { delta: 0.05, cf_delta: 0.0, clip: None, full_weight_integral: full };
        let (report, terms) = entropy_bound_check(&p, &[0.25, 0.5, 1.0], &inputs, &spec).unwrap();
        assert!(report.passed());
        assert!(terms.windows(2).all(|w| w[1].rhs >= w[0].rhs));
        assert!(terms.iter().all(|r| r.slack() > 0.0));
    }

    #[test]
    fn violated_bound_is_an_error() {
        let p = fixtures::constant_1d(0.3, 1e-3);
        let spec = QuadratureSpec::new(1e-3, 1e-3).unwrap();
        // A negative weight integral makes the right side too small on purpose.
        let inputs = EntropyBoundInputs { delta: 1e3, cf_delta: 0.0, clip: None, full_weight_integral: -1e3 };
        assert!(matches!(entropy_bound_check(&p, &[1.0], &inputs, &spec), Err(Error::TheoremViolation(_))));
    }
}
