//! `transport-solve`, `verify-suite` and `entropy-audit`.

use std::fmt::Write as _;
use std::sync::Arc;

use ctlab::fields::{cf_delta_at_tail, suggested_delta, CfDeltaConfig};
use ctlab::measures::{jensen_chain, LadderMode, SliceDensity};
use ctlab::rng::{self, domain};
use ctlab::stats;
use ctlab::transport::{pde_residual, solve, Lattice};
use ctlab::verify::{
    entropy_bound_check, mass_history, slice_integral, uniqueness_probe, weak_residual_studies, EntropyBoundInputs,
    QuadratureSpec, Verdict,
};

use super::{judged, num, Outcome, OutputFile};
use crate::catalog::{build_measure, build_problem, build_problem_with, exact_slice, function_label};
use crate::config::{EntropyAuditParams, TransportSolveParams, VerifySuiteParams};
use crate::error::{RunError, RunResult};

fn check_times(times: &[f64], horizon: f64, path: &str) -> RunResult<()> {
    if times.is_empty() {
        return Err(RunError::invalid(path, "needs at least one time"));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && **t <= horizon)) {
        return Err(RunError::invalid(path, format!("time {t} outside [0, {horizon}]")));
    }
    Ok(())
}

fn positive(value: f64, path: &str) -> RunResult<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(RunError::invalid(path, format!("must be positive, got {value}")))
    }
}

pub fn transport_solve(p: &TransportSolveParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "transport-solve";
    let built = build_problem(&p.problem, seed, &format!("{PATH}.problem"))?;
    let problem = built.problem;
    check_times(&p.times, problem.horizon(), &format!("{PATH}.times"))?;
    problem.flow.check_divides(&p.times).map_err(|e| RunError::at(format!("{PATH}.times"), e))?;
    positive(p.grid.spacing, &format!("{PATH}.grid.spacing"))?;
    positive(p.mass.spacing, &format!("{PATH}.mass.spacing"))?;
    let half_width = p.grid.half_width.unwrap_or_else(|| problem.support_radius());
    positive(half_width, &format!("{PATH}.grid.half_width"))?;
    let quad =
        QuadratureSpec::new(p.mass.spacing, problem.flow.dt).map_err(|e| RunError::at(format!("{PATH}.mass"), e))?;
    if let Some(r) = &p.residual {
        let rp = format!("{PATH}.residual");
        if r.steps.len() < 2 {
            return Err(RunError::invalid(format!("{rp}.steps"), "needs at least two steps"));
        }
        for s in &r.steps {
            positive(*s, &format!("{rp}.steps"))?;
        }
        if r.x.len() != problem.dim() {
            return Err(RunError::invalid(format!("{rp}.x"), format!("must have {} entries", problem.dim())));
        }
    }

    let mut out = Outcome::default();
    let lattice = Lattice::around(&vec![0.0; problem.dim()], half_width, p.grid.spacing);
    let points: Vec<Vec<f64>> = lattice.points().collect();
    let solution = solve(problem.clone(), &p.times, &points)?;
    let mut csv = Vec::new();
    solution.write_csv(&mut csv).map_err(|source| RunError::Output { path: "solution.csv".into(), source })?;
    out.files.push(OutputFile { name: "solution.csv".into(), contents: csv });

    for r in mass_history(&problem, &p.times, &quad, p.mass.tolerance)? {
        out.push(r);
    }

    if let Some(r) = &p.residual {
        let mut rows = String::from("step,residual\n");
        let mut abs = Vec::with_capacity(r.steps.len());
        for &h in &r.steps {
            let v = pde_residual(&problem, r.t, &r.x, h, h).map_err(|e| RunError::at(format!("{PATH}.residual"), e))?;
            let _ = writeln!(rows, "{},{}", num(h), num(v));
            abs.push(v.abs());
        }
        let finest = *abs.last().expect("at least two steps");
        let verdict_order;
        let slope;
        if abs.iter().all(|&a| a > 1e-13) {
            slope = stats::log_log_slope(&r.steps, &abs);
            verdict_order =
                if (slope - r.expected_order).abs() <= r.order_tolerance { Verdict::Pass } else { Verdict::Fail };
        } else {
            // Residuals at roundoff level carry no order information.
            slope = f64::NAN;
            verdict_order = if finest <= r.max_residual { Verdict::Pass } else { Verdict::Fail };
        }
        out.push(
            judged("pde residual order", slope - r.expected_order, 0.0, r.order_tolerance, verdict_order)
                .with_meta("slope", slope)
                .with_meta("steps", &r.steps)
                .with_meta("residuals", &abs),
        );
        out.push(ctlab::verify::VerificationReport::new("pde residual", finest, 0.0, r.max_residual));
        out.files.push(OutputFile::text("pde_residual.csv", rows));
    }
    Ok(out)
}

pub fn verify_suite(p: &VerifySuiteParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "verify-suite";
    if p.cases.is_empty() && p.uniqueness.is_empty() {
        return Err(RunError::invalid(PATH, "needs at least one case or uniqueness probe"));
    }
    // Build and validate everything before computing.
    let mut cases = Vec::with_capacity(p.cases.len());
    for (i, case) in p.cases.iter().enumerate() {
        let cp = format!("{PATH}.cases[{i}]");
        let built = build_problem(&case.problem, seed, &format!("{cp}.problem"))?;
        if !case.mass_times.is_empty() {
            check_times(&case.mass_times, built.problem.horizon(), &format!("{cp}.mass_times"))?;
        }
        let quad = QuadratureSpec::new(case.weak.spacing, case.weak.time_step)
            .map_err(|e| RunError::at(format!("{cp}.weak"), e))?;
        let mass_quad = QuadratureSpec::new(case.mass.spacing, built.problem.flow.dt)
            .map_err(|e| RunError::at(format!("{cp}.mass"), e))?;
        for (j, u) in case.tests.iter().enumerate() {
            u.space.validate().map_err(|e| RunError::at(format!("{cp}.tests[{j}]"), e))?;
            if u.space.dimension() > built.problem.dim() {
                return Err(RunError::invalid(format!("{cp}.tests[{j}]"), "test function exceeds the slice dimension"));
            }
        }
        cases.push((case, built, quad, mass_quad));
    }
    let mut probes = Vec::with_capacity(p.uniqueness.len());
    for (i, u) in p.uniqueness.iter().enumerate() {
        let up = format!("{PATH}.uniqueness[{i}]");
        if u.ladders.len() < 2 {
            return Err(RunError::invalid(format!("{up}.ladders"), "needs at least two ladder specifications"));
        }
        let mut problems = Vec::with_capacity(u.ladders.len());
        let mut exact = None;
        for (j, l) in u.ladders.iter().enumerate() {
            let b = build_problem_with(&u.problem, Some(l), seed, &format!("{up}.ladders[{j}]"))?;
            exact.get_or_insert(b.exact);
            problems.push(b.problem);
        }
        // One common initial density, normalised against the first ladder.
        let rho0 = problems[0].rho0.clone();
        for q in problems.iter_mut().skip(1) {
            q.rho0 = rho0.clone();
        }
        check_times(&u.times, problems[0].horizon(), &format!("{up}.times"))?;
        if u.samples < 2 {
            return Err(RunError::invalid(format!("{up}.samples"), "must be ≥ 2"));
        }
        probes.push((u, problems, exact.expect("at least two ladders")));
    }

    let mut out = Outcome::default();
    for (case, built, quad, mass_quad) in &cases {
        let problem = &built.problem;
        if !case.mass_times.is_empty() {
            for mut r in mass_history(problem, &case.mass_times, mass_quad, case.mass.tolerance)? {
                r.check = format!("{}: {}", case.name, r.check);
                out.push(r);
            }
        }
        let mut rows = String::from("test,time_step,residual\n");
        let studies = if case.tests.is_empty() {
            Vec::new()
        } else {
            weak_residual_studies(
                problem,
                &case.tests,
                quad,
                case.weak.levels,
                case.weak.tolerance,
                case.weak.min_order,
            )
            .map_err(|e| RunError::at(format!("{PATH}.cases.{}", case.name), e))?
        };
        for (u, study) in case.tests.iter().zip(studies) {
            let label = format!("{:?}/{}", u.profile, function_label(&u.space)).to_lowercase();
            for (h, r) in study.time_steps.iter().zip(&study.residuals) {
                let _ = writeln!(rows, "{label},{},{}", num(*h), num(*r));
            }
            let mut report = study.report;
            report.check = format!("{}: weak residual {label}", case.name);
            out.push(report);
        }
        if !case.tests.is_empty() {
            out.files.push(OutputFile::text(format!("weak_{}.csv", case.name), rows));
        }
    }
    for (i, (u, problems, exact)) in probes.iter().enumerate() {
        let s = rng::child_seed(seed, domain::UNIQUENESS, i as u64);
        let mut r = uniqueness_probe(problems, exact.as_ref(), &u.times, u.samples, s, u.tolerance)?;
        r.check = format!("{}: {}", u.name, r.check);
        out.push(r.with_meta("ladders", &u.ladders));
    }
    Ok(out)
}

pub fn entropy_audit(p: &EntropyAuditParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "entropy-audit";
    if p.cases.is_empty() && p.jensen.is_empty() {
        return Err(RunError::invalid(PATH, "needs at least one case or Jensen block"));
    }
    let mut cases = Vec::with_capacity(p.cases.len());
    for (i, case) in p.cases.iter().enumerate() {
        let cp = format!("{PATH}.cases[{i}]");
        let built = build_problem(&case.problem, seed, &format!("{cp}.problem"))?;
        check_times(&case.times, built.problem.horizon(), &format!("{cp}.times"))?;
        if let Some(d) = case.delta {
            positive(d, &format!("{cp}.delta"))?;
        }
        positive(case.cf.spacing, &format!("{cp}.cf.spacing"))?;
        let quad = QuadratureSpec::new(case.spacing, built.problem.flow.dt).map_err(|e| RunError::at(&cp, e))?;
        if !built.problem.support_radius().is_finite() {
            return Err(RunError::invalid(format!("{cp}.problem.field"), "the entropy audit needs a bounded field"));
        }
        cases.push((case, built, quad));
    }
    let mut jensen = Vec::with_capacity(p.jensen.len());
    for (i, j) in p.jensen.iter().enumerate() {
        let jp = format!("{PATH}.jensen[{i}]");
        let measure = build_measure(&j.measure, seed, &format!("{jp}.measure"))?;
        let slice = exact_slice(measure, Some(j.split), j.tail.as_deref(), &jp)?;
        positive(j.half_width, &format!("{jp}.half_width"))?;
        if j.clips.is_empty() || j.scales.is_empty() || j.epsilons.is_empty() {
            return Err(RunError::invalid(&jp, "clips, scales and epsilons must be nonempty"));
        }
        jensen.push((j, slice));
    }

    let mut out = Outcome::default();
    for (i, (case, built, quad)) in cases.iter().enumerate() {
        let problem = &built.problem;
        let precision = built.measure.gaussian().precision().to_vec();
        let delta = case.delta.unwrap_or_else(|| suggested_delta(&problem.field, &precision));
        let (ladder_grid, mode) = match (&case.cf.ladders, &case.problem.ladder) {
            (Some(ls), _) => (ls.iter().map(|l| (l.clip, l.scale)).collect(), LadderMode::Force),
            (None, Some(l)) => (vec![(l.clip, l.scale)], LadderMode::Force),
            (None, None) => (CfDeltaConfig::default_grid(), LadderMode::Auto),
        };
        let radius = problem.support_radius();
        let cfg = CfDeltaConfig {
            delta,
            ladder_grid,
            mode,
            radius,
            spacing: case.cf.spacing,
            mc_points: case.cf.mc_points,
            time_steps: case.cf.time_steps,
            seed: rng::child_seed(seed, domain::PROBE, i as u64),
        };
        let exact: Arc<dyn SliceDensity> = built.exact.clone();
        let cf = cf_delta_at_tail(&problem.field, exact.clone(), &precision, &cfg)?;
        let full = slice_integral(exact.as_ref(), &vec![0.0; problem.dim()], radius + 3.0, case.cf.spacing)?;
        let inputs = EntropyBoundInputs {
            delta,
            cf_delta: cf.value,
            clip: case.problem.ladder.map(|l| l.clip),
            full_weight_integral: full,
        };
        match entropy_bound_check(problem, &case.times, &inputs, quad) {
            Ok((mut report, terms)) => {
                report.check = format!("{}: {}", case.name, report.check);
                let mut rows = String::from(
                    "t,lhs,rhs,slack,initial_entropy,cf_delta,log_delta_term,clip_term,weight_term,sharper_rhs\n",
                );
                for t in &terms {
                    let _ = writeln!(
                        rows,
                        "{},{},{},{},{},{},{},{},{},{}",
                        num(t.t),
                        num(t.lhs),
                        num(t.rhs),
                        num(t.slack()),
                        num(t.initial_entropy),
                        num(t.cf_delta),
                        num(t.log_delta_term),
                        num(t.clip_term),
                        num(t.weight_term),
                        num(t.sharper_rhs)
                    );
                }
                out.files.push(OutputFile::text(format!("entropy_{}.csv", case.name), rows));
                out.push(report.with_meta("delta", delta).with_meta("cf_delta_per_ladder", &cf.per_spec));
            }
            Err(ctlab::Error::TheoremViolation(msg)) => {
                out.push(
                    judged(format!("{}: entropy bound", case.name), f64::NAN, 0.0, 0.0, Verdict::Fail)
                        .with_meta("violation", &msg),
                );
                out.violations.push(format!("{}: {msg}", case.name));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut rows = String::from("case,clip,scale,epsilon,direction,ladder,clipped,full\n");
    for (j, slice) in &jensen {
        let center = j.center.clone().unwrap_or_else(|| vec![0.0; slice.dim()]);
        for &clip in &j.clips {
            for &scale in &j.scales {
                let records = jensen_chain(slice, clip, scale, &j.epsilons, &center, j.half_width)
                    .map_err(|e| RunError::at(format!("{PATH}.jensen.{}", j.name), e))?;
                let mut worst: f64 = 0.0;
                for r in &records {
                    worst = worst.max(r.ladder - r.clipped).max(r.clipped - r.full);
                    let _ = writeln!(
                        rows,
                        "{},{},{},{},{},{},{},{}",
                        j.name,
                        num(r.clip),
                        num(r.scale),
                        num(r.epsilon),
                        r.direction,
                        num(r.ladder),
                        num(r.clipped),
                        num(r.full)
                    );
                }
                let pass = records.iter().all(|r| r.holds(j.tolerance));
                out.push(
                    judged(
                        format!("{}: jensen chain M={clip} l={scale}", j.name),
                        worst,
                        0.0,
                        j.tolerance,
                        if pass { Verdict::Pass } else { Verdict::Fail },
                    )
                    .with_meta("records", records.len()),
                );
            }
        }
    }
    if !jensen.is_empty() {
        out.files.push(OutputFile::text("jensen.csv", rows));
    }
    Ok(out)
}
