//! Property tests of the type-level invariants, exercised through the
//! public API only.

use std::f64::consts::PI;
use std::sync::Arc;

use ctlab::fields::{CylindricalField, FieldKind, NemytskiiField, Reaction};
use ctlab::functions::TimeProfile;
use ctlab::measures::{
    ExactSlice, GaussianMeasure, GibbsMeasure, LadderDensity, LadderMode, LadderSpec, ReferenceMeasure, SliceDensity,
};
use ctlab::spde::PolynomialReaction;
use ctlab::spectral::{eigenvalue, lp_norm, synthesize, QuadratureGrid, SpectralBasis, SpectralCoords};
use ctlab::transport::{feynman_kac, FlowConfig, InitialDensity, TransportProblem};
use ctlab::verify::{Verdict, VerificationReport};
use proptest::prelude::*;

fn gibbs_slice(split: usize, tail_seed: u64) -> Arc<ExactSlice> {
    let gibbs = GibbsMeasure::new(GaussianMeasure::dirichlet(4).unwrap(), 1.0, 4.0, 2000, 1).unwrap();
    let measure = Arc::new(ReferenceMeasure::Gibbs(gibbs));
    let tail = measure.gaussian().draw_tail(split + 1, tail_seed, 0);
    Arc::new(ExactSlice::new(measure, split, &tail).unwrap())
}

fn arctan_problem(center: f64) -> TransportProblem {
    let weight: Arc<dyn SliceDensity> = gibbs_slice(1, 3);
    let g = NemytskiiField::new(Reaction::NegArctan, 1).unwrap().galerkin(1).unwrap();
    let field = CylindricalField::new(FieldKind::Nemytskii(g), 1, 1.0).unwrap();
    let rho0 = InitialDensity::bump(vec![center], 0.2).unwrap();
    TransportProblem::new(rho0, field, weight, FlowConfig::rk4(0.05).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_holds_in_the_truncated_space(coeffs in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let x = SpectralCoords::new(coeffs.clone()).unwrap();
        let direct: f64 = coeffs.iter().map(|a| a * a).sum();
        prop_assert!((x.norm_sq() - direct).abs() <= 1e-12 * (1.0 + direct));
        let grid = QuadratureGrid::default_grid();
        let l2 = lp_norm(&synthesize(&x, &grid), 2.0, &grid).unwrap();
        prop_assert!((l2 * l2 - direct).abs() <= 1e-10 * (1.0 + direct));
    }

    #[test]
    fn truncation_keeps_the_leading_coefficients(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..12),
        keep in 1usize..12,
    ) {
        let x = SpectralCoords::new(coeffs.clone()).unwrap();
        let n = keep.min(coeffs.len());
        let t = x.truncate(n);
        prop_assert_eq!(t.coeffs(), &coeffs[..n]);
    }

    #[test]
    fn eigenvalues_are_pi_squared_j_squared(j in 1usize..10_000) {
        prop_assert_eq!(eigenvalue(j), PI * PI * (j * j) as f64);
    }

    #[test]
    fn ladder_respects_its_clip_bounds(x in -1.5f64..1.5, clip in 1.5f64..12.0, scale in 2.0f64..20.0) {
        let spec = LadderSpec::new(clip, scale, LadderMode::Force).unwrap();
        let ladder = LadderDensity::new(gibbs_slice(1, 5), spec, 2).unwrap();
        let v = ladder.density(&[x]);
        prop_assert!(v >= (1.0 - 1e-12) / clip && v <= clip * (1.0 + 1e-12), "{} outside [1/{clip}, {clip}]", v);
    }

    #[test]
    fn gibbs_slices_are_strictly_positive(x in -3.0f64..3.0, y in -3.0f64..3.0, seed in 0u64..50) {
        let s = gibbs_slice(2, seed);
        prop_assert!(s.density(&[x, y]) > 0.0);
    }

    #[test]
    fn fields_ignore_tail_modes(a in -2.0f64..2.0, b in -2.0f64..2.0, tail in -5.0f64..5.0) {
        let g = NemytskiiField::new(Reaction::NegArctan, 4).unwrap().galerkin(2).unwrap();
        let field = CylindricalField::new(FieldKind::Nemytskii(g), 2, 1.0).unwrap();
        let x = SpectralCoords::new(vec![a, b, 0.3, -0.1]).unwrap();
        let y = SpectralCoords::new(vec![a, b, tail, 2.0 * tail]).unwrap();
        prop_assert_eq!(field.eval(0.5, &x).unwrap(), field.eval(0.5, &y).unwrap());
    }

    #[test]
    fn nemytskii_fields_respect_their_bound(coeffs in prop::collection::vec(-10.0f64..10.0, 3)) {
        let g = NemytskiiField::new(Reaction::NegArctan, 3).unwrap().galerkin(3).unwrap();
        let bound = g.sup_bound();
        let field = CylindricalField::new(FieldKind::Nemytskii(g), 3, 1.0).unwrap();
        let v = field.eval(0.0, &SpectralCoords::new(coeffs).unwrap()).unwrap();
        prop_assert!(v.norm_sq().sqrt() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn transport_density_is_exact_at_zero_nonnegative_and_compactly_supported(
        x in -1.5f64..1.5,
        t in 0.0f64..1.0,
        center in -0.3f64..0.3,
    ) {
        let p = arctan_problem(center);
        prop_assert_eq!(feynman_kac(&p, 0.0, &[x]).unwrap(), p.rho0.value(&[x]));
        let rho = feynman_kac(&p, t, &[x]).unwrap();
        prop_assert!(rho >= 0.0);
        if x.abs() > p.support_radius() {
            prop_assert_eq!(rho, 0.0);
        }
    }

    #[test]
    fn time_profiles_vanish_at_the_horizon(horizon in 0.1f64..5.0) {
        prop_assert_eq!(TimeProfile::Linear.value(horizon, horizon), 0.0);
        prop_assert!(TimeProfile::Cosine.value(horizon, horizon).abs() < 1e-15);
    }

    #[test]
    fn verdict_is_pass_iff_residual_within_tolerance(r in -1.0f64..1.0, tol in 0.0f64..1.0) {
        let rep = VerificationReport::new("p", r, 0.0, tol);
        prop_assert_eq!(rep.verdict == Verdict::Pass, r.abs() <= tol);
    }

    #[test]
    fn admissible_reactions_are_decreasing(c1 in -5.0f64..0.0, r in -50.0f64..50.0) {
        let p = PolynomialReaction::cubic(c1).unwrap();
        prop_assert!(p.derivative(r) <= 0.0);
    }
}

#[test]
fn quadrature_weights_and_orthonormality() {
    let grid = QuadratureGrid::default_grid();
    let total: f64 = grid.weights().iter().sum();
    assert!((total - 1.0).abs() < 1e-13);
    let basis = SpectralBasis::new(grid, 8).unwrap();
    for i in 1..=8 {
        for j in 1..=8 {
            let ip: f64 = basis.weighted_mode(i).iter().zip(basis.mode(j)).map(|(a, b)| a * b).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((ip - expected).abs() < 1e-12, "<e_{i}, e_{j}> = {ip}");
        }
    }
}

#[test]
fn increasing_reactions_are_rejected() {
    assert!(PolynomialReaction::cubic(1.0).is_err());
    assert!(PolynomialReaction::new(vec![0.0, 0.0, 0.0, 1.0]).is_err());
    assert!(PolynomialReaction::new(vec![0.0, 0.0, -1.0]).is_err());
}
