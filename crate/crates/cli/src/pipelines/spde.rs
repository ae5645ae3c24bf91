//! `spde-invariant`, `commutator-curve` and `bdg-check`.

use std::fmt::Write as _;

use ctlab::functions::CylindricalFunction;
use ctlab::rng::{self, domain};
use ctlab::spde::{
    bdg_check, bel_gradient, commutator_decay_curve, derivative_flow, sample_invariant, semigroup, simulate_ensemble,
    sup_moment_oracle, v_norm, write_curve_csv, yosida_drift, yosida_resolvent, DecayVerdict, StepIntegrand,
};
use ctlab::spectral::eigenvalue;
use ctlab::stats;
use ctlab::verify::{Verdict, VerificationReport};

use super::{judged, num, Outcome, OutputFile};
use crate::catalog::{build_field, build_reaction, build_spde};
use crate::config::{BdgCheckParams, CommutatorCurveParams, IntegrandSpec, ReactionSpec, SpdeInvariantParams};
use crate::error::{RunError, RunResult};

pub fn spde_invariant(p: &SpdeInvariantParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "spde-invariant";
    let model = build_spde(&p.model, &p.model.reaction, p.model.yosida_alpha, &format!("{PATH}.model"))?;
    let n = model.n_modes();
    if let Some(ou) = &p.ou {
        let op = format!("{PATH}.ou");
        let identity_noise = model.config().noise.iter().all(|b| *b == 1.0);
        if p.model.reaction != ReactionSpec::Zero || !identity_noise {
            return Err(RunError::invalid(&op, "the Ornstein-Uhlenbeck oracle needs a zero reaction and B = I"));
        }
        if ou.paths < 2 {
            return Err(RunError::invalid(format!("{op}.paths"), "must be ≥ 2"));
        }
        if !(ou.t > 0.0 && ou.t <= p.model.horizon) {
            return Err(RunError::invalid(format!("{op}.t"), "must lie in (0, horizon]"));
        }
    }
    let contraction = match &p.contraction {
        Some(c) => {
            let cp = format!("{PATH}.contraction");
            let m = build_spde(&p.model, &c.reaction, c.yosida_alpha, &cp)?;
            let x0 = c.x0.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                e
            });
            if x0.len() != n {
                return Err(RunError::invalid(format!("{cp}.x0"), format!("must have {n} entries")));
            }
            Some((c, m, x0))
        }
        None => None,
    };
    let yosida = match &p.yosida {
        Some(y) => {
            let yp = format!("{PATH}.yosida");
            let reaction = build_reaction(&y.reaction, &format!("{yp}.reaction"))?;
            if y.alphas.iter().any(|a| !(*a > 0.0)) || y.alphas.is_empty() {
                return Err(RunError::invalid(format!("{yp}.alphas"), "must be nonempty and positive"));
            }
            if y.points < 2 || !(y.range > 0.0) {
                return Err(RunError::invalid(&yp, "needs range > 0 and at least two points"));
            }
            Some((y, reaction))
        }
        None => None,
    };

    let mut out = Outcome::default();
    let sample = match sample_invariant(&model, &p.invariant, seed) {
        Ok(s) => s,
        Err(ctlab::Error::NotConverged(msg)) => {
            out.push(
                judged("invariant stationarity", f64::NAN, 0.0, 0.0, Verdict::Inconclusive).with_meta("reason", &msg),
            );
            return Ok(out);
        }
        Err(e) => return Err(RunError::at(format!("{PATH}.invariant"), e)),
    };
    let m = &sample.moments;
    let drift = m.first_half.mean - m.second_half.mean;
    let combined = m.first_half.stderr.hypot(m.second_half.stderr);
    out.push(
        VerificationReport::new("invariant stationarity", drift, combined, 3.0 * combined)
            .with_meta("l2", m.l2)
            .with_meta("l4", m.l4),
    );
    let mut csv = String::new();
    let header: Vec<String> = (1..=n).map(|j| format!("mode_{j}")).collect();
    let _ = writeln!(csv, "{}", header.join(","));
    for x in &sample.samples {
        let row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        let _ = writeln!(csv, "{}", row.join(","));
    }
    out.files.push(OutputFile::text("samples.csv", csv));

    if let Some(ou) = &p.ou {
        for j in 1..=ou.modes_checked.min(n) {
            let xs: Vec<f64> = sample.samples.iter().map(|x| x[j - 1]).collect();
            let sq: Vec<f64> = xs.iter().map(|v| v * v).collect();
            let mean = stats::mean_stderr(&xs);
            let var = stats::mean_stderr(&sq);
            let exact = 0.5 / eigenvalue(j);
            out.push(VerificationReport::new(
                format!("ou invariant mean e_{j}"),
                mean.mean,
                mean.stderr,
                ou.max_z * mean.stderr,
            ));
            out.push(
                VerificationReport::new(
                    format!("ou invariant variance e_{j}"),
                    var.mean - exact,
                    var.stderr,
                    ou.max_z * var.stderr,
                )
                .with_meta("exact", exact),
            );
        }
        let mut x = vec![0.0; n];
        x[0] = ou.x1;
        let mut h = vec![0.0; n];
        h[0] = 1.0;
        let phi = CylindricalFunction::SoftClip { index: 1, scale: 100.0 };
        let decay = (-eigenvalue(1) * ou.t).exp();
        let s = semigroup(&model, &phi, &x, ou.t, ou.paths, rng::child_seed(seed, domain::SPDE_PATH, 1))?;
        out.push(
            VerificationReport::new("ou semigroup", s.mean - decay * ou.x1, s.stderr, ou.max_z * s.stderr)
                .with_meta("exact", decay * ou.x1),
        );
        let b = bel_gradient(&model, &phi, &x, &h, ou.t, ou.paths, rng::child_seed(seed, domain::SPDE_PATH, 2))?;
        out.push(
            VerificationReport::new(
                "ou bel gradient",
                b.estimate.mean - decay,
                b.estimate.stderr,
                ou.max_z * b.estimate.stderr,
            )
            .with_meta("exact", decay),
        );
    }

    if let Some((c, m, x0)) = &contraction {
        let ensemble = simulate_ensemble(m, x0, c.paths, rng::child_seed(seed, domain::SPDE_PATH, 3))?;
        let mut h = vec![0.0; n];
        h[0] = 1.0;
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for path in &ensemble.paths {
            match derivative_flow(m, path, &h) {
                Ok(etas) => {
                    for eta in &etas {
                        worst = worst.max(eta.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0);
                    }
                }
                Err(ctlab::Error::SolverFailure(msg)) => {
                    failure = Some(msg);
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let mut r = VerificationReport::new("derivative flow contraction", worst.max(0.0), 0.0, c.slack)
            .with_meta("paths", c.paths)
            .with_meta("max_excess", worst);
        if let Some(msg) = failure {
            r.verdict = Verdict::Fail;
            r = r.with_meta("failure", msg);
        }
        out.push(r);
    }

    if let Some((y, reaction)) = &yosida {
        let mut worst: f64 = 0.0;
        for &alpha in &y.alphas {
            for k in 0..y.points {
                let r = -y.range + 2.0 * y.range * k as f64 / (y.points - 1) as f64;
                let j = yosida_resolvent(reaction, alpha, r)?;
                let drift = yosida_drift(reaction, alpha, r)?;
                worst = worst.max((drift - reaction.value(j)).abs());
            }
        }
        out.push(VerificationReport::new("yosida identity", worst, 0.0, y.tolerance).with_meta("alphas", &y.alphas));
    }
    Ok(out)
}

pub fn commutator_curve(p: &CommutatorCurveParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "commutator-curve";
    let model = build_spde(&p.model, &p.model.reaction, p.model.yosida_alpha, &format!("{PATH}.model"))?;
    p.u.validate().map_err(|e| RunError::at(format!("{PATH}.u"), e))?;
    let dim = p.field.natural_dim().or(p.field_dim).unwrap_or(1);
    let horizon = p.model.horizon.max(p.budget.field_time);
    let field = build_field(&p.field, dim, horizon, &format!("{PATH}.field"))?;
    if dim > model.n_modes() || p.u.dimension() > model.n_modes() {
        return Err(RunError::invalid(PATH, "u and F must live in the model's modes"));
    }
    if p.eps.len() < 2 || p.eps.windows(2).any(|w| w[1] >= w[0]) || p.eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(RunError::invalid(format!("{PATH}.eps"), "must be ≥ 2 strictly decreasing values in (0, 1]"));
    }
    if p.budget.n_paths < 2 || p.budget.n_x < 2 || p.budget.steps_per_eps == 0 {
        return Err(RunError::invalid(format!("{PATH}.budget"), "needs ≥ 2 paths, ≥ 2 points and ≥ 1 step"));
    }
    if let Some(v) = &p.v_norm {
        v.phi.validate().map_err(|e| RunError::at(format!("{PATH}.v_norm.phi"), e))?;
        if v.eps.is_empty() || v.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(RunError::invalid(format!("{PATH}.v_norm.eps"), "must be nonempty and positive"));
        }
    }

    let mut out = Outcome::default();
    let curve = commutator_decay_curve(&model, &p.u, &field, &p.eps, &p.budget, &p.invariant, seed)?;
    let first = curve.points[0];
    let last = curve.points[curve.points.len() - 1];
    let margin = 2.0 * first.stderr.hypot(last.stderr);
    let verdict = match curve.verdict {
        DecayVerdict::Decay | DecayVerdict::Zero => Verdict::Pass,
        DecayVerdict::Inconclusive => Verdict::Inconclusive,
    };
    out.push(
        judged("commutator decay", last.value - first.value, margin, margin, verdict)
            .with_meta("curve_verdict", curve.verdict)
            .with_meta("points", &curve.points),
    );
    let mut csv = Vec::new();
    write_curve_csv(&curve, &mut csv)
        .map_err(|source| RunError::Output { path: "commutator_curve.csv".into(), source })?;
    out.files.push(OutputFile { name: "commutator_curve.csv".into(), contents: csv });

    if let Some(v) = &p.v_norm {
        let s = rng::child_seed(seed, domain::V_NORM, 0);
        let report = v_norm(&model, &v.phi, &v.eps, &p.budget, &p.invariant, s)?;
        let mut rows = String::from("epsilon,value,stderr,n_samples\n");
        let mut lowest = f64::INFINITY;
        for (eps, e) in &report.per_eps {
            let _ = writeln!(rows, "{},{},{},{}", num(*eps), num(e.mean), num(e.stderr), e.samples);
            lowest = lowest.min(e.mean + 4.0 * e.stderr);
        }
        // The quadratic form is nonnegative and bounded along the grid.
        let ok = report.max.is_finite() && lowest >= 0.0;
        out.push(
            judged("v norm", report.max, 0.0, f64::INFINITY, if ok { Verdict::Pass } else { Verdict::Fail })
                .with_meta("per_eps", &report.per_eps),
        );
        out.files.push(OutputFile::text("v_norm.csv", rows));
    }
    Ok(out)
}

pub fn bdg(p: &BdgCheckParams, seed: u64) -> RunResult<Outcome> {
    const PATH: &str = "bdg-check";
    let integrand = match &p.integrand {
        IntegrandSpec::Constant { value, steps } => StepIntegrand::constant(*value, *steps, p.horizon),
        IntegrandSpec::Steps { values } => StepIntegrand { values: values.clone(), horizon: p.horizon },
    };
    integrand.validate().map_err(|e| RunError::at(format!("{PATH}.integrand"), e))?;
    if !(p.min_factor > 0.0) {
        return Err(RunError::invalid(format!("{PATH}.min_factor"), "must be positive"));
    }
    let report = bdg_check(p.p, &integrand, p.samples, seed).map_err(|e| RunError::at(PATH, e))?;
    let mut out = Outcome::default();
    let limit = report.constant / p.min_factor;
    out.push(
        VerificationReport::new("bdg inequality", report.ratio.mean, report.ratio.stderr, limit)
            .with_meta("constant", report.constant)
            .with_meta("factor", report.factor)
            .with_meta("degenerate", report.degenerate),
    );
    let combined = report.ratio.stderr.hypot(report.doubled.stderr);
    out.push(
        judged(
            "bdg stability under doubling",
            report.doubled.mean - report.ratio.mean,
            combined,
            3.0 * combined,
            if report.stable { Verdict::Pass } else { Verdict::Fail },
        )
        .with_meta("doubled", report.doubled),
    );
    if let IntegrandSpec::Constant { value, .. } = p.integrand {
        if value != 0.0 {
            let exact = sup_moment_oracle(p.p);
            out.push(
                VerificationReport::new(
                    "bdg brownian sup moment",
                    report.ratio.mean - exact,
                    report.ratio.stderr,
                    4.0 * report.ratio.stderr,
                )
                .with_meta("exact", exact),
            );
        }
    }
    let factor = report.factor.map_or(String::new(), num);
    let csv = format!(
        "p,ratio,stderr,constant,factor,samples\n{},{},{},{},{},{}\n",
        num(p.p),
        num(report.ratio.mean),
        num(report.ratio.stderr),
        num(report.constant),
        factor,
        report.ratio.samples
    );
    out.files.push(OutputFile::text("bdg.csv", csv));
    Ok(out)
}
