//! Small statistical utilities: compensated sums, Monte Carlo estimates with
//! standard errors, blocked jackknife, autocorrelation and the two-sample
//! Kolmogorov–Smirnov statistic.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Deterministic value with zero uncertainty.
    pub fn exact(value: f64) -> Self {
        Estimate { mean: value, stderr: 0.0, samples: 1 }
    }

    /// Number of standard errors separating the estimate from `target`.
    /// Returns 0 for an exact match and infinity for a mismatch with zero error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else if self.stderr > 0.0 {
            d / self.stderr
        } else {
            f64::INFINITY
        }
    }
}

/// Neumaier-compensated summation in input order.
///
/// Summation order is fixed by the slice, which keeps reductions independent
/// of how the terms were produced (sequentially or in parallel).
pub fn sum(values: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Compensated mean.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    sum(values) / values.len() as f64
}

/// Sample mean and standard error assuming independent draws.
pub fn mean_stderr(values: &[f64]) -> Estimate {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return Estimate { mean: m, stderr: f64::NAN, samples: n };
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let var = sum(&dev) / (n as f64 - 1.0);
    Estimate { mean: m, stderr: (var / n as f64).sqrt(), samples: n }
}

/// Mean with a delete-one-block jackknife standard error.
///
/// Blocking makes the error estimate robust to the short-range correlation
/// of Markov chain output.
pub fn block_jackknife_mean(values: &[f64], blocks: usize) -> Estimate {
    let n = values.len();
    let blocks = blocks.clamp(2, n.max(2));
    if n < blocks {
        return mean_stderr(values);
    }
    let size = n / blocks;
    let used = size * blocks;
    let block_sums: Vec<f64> = (0..blocks).map(|b| sum(&values[b * size..(b + 1) * size])).collect();
    let total = sum(&block_sums);
    let full_mean = mean(values);
    let leave_out: Vec<f64> = block_sums.iter().map(|s| (total - s) / (used - size) as f64).collect();
    let lo_mean = mean(&leave_out);
    let dev: Vec<f64> = leave_out.iter().map(|v| (v - lo_mean) * (v - lo_mean)).collect();
    let var = (blocks as f64 - 1.0) / blocks as f64 * sum(&dev);
    Estimate { mean: full_mean, stderr: var.sqrt(), samples: n }
}

/// Standard error of the mean from non-overlapping batch means.
pub fn batch_means(values: &[f64], batches: usize) -> Estimate {
    let n = values.len();
    let batches = batches.clamp(2, n.max(2));
    if n < batches {
        return mean_stderr(values);
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&values[b * size..(b + 1) * size])).collect();
    let e = mean_stderr(&means);
    Estimate { mean: mean(values), stderr: e.stderr, samples: n }
}

/// Lag-one sample autocorrelation.
pub fn lag1_autocorrelation(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let m = mean(values);
    let num: Vec<f64> = values.windows(2).map(|w| (w[0] - m) * (w[1] - m)).collect();
    let den: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let d = sum(&den);
    if d == 0.0 {
        0.0
    } else {
        sum(&num) / d
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_survival(lambda))
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let term = 2.0 * if k % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let num: Vec<f64> = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).collect();
    let den: Vec<f64> = lx.iter().map(|a| (a - mx) * (a - mx)).collect();
    sum(&num) / sum(&den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(&v), 2.0);
    }

    #[test]
    fn stderr_of_constant_sample_is_zero() {
        let e = mean_stderr(&[3.0; 10]);
        assert_eq!(e.mean, 3.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn jackknife_matches_classical_stderr_for_singleton_blocks() {
        let v: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let a = mean_stderr(&v);
        let b = block_jackknife_mean(&v, 50);
        assert!((a.stderr - b.stderr).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_shift_and_accepts_identity() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
        let c: Vec<f64> = a.iter().map(|v| v + 0.3).collect();
        assert!(ks_two_sample(&a, &b).1 > 0.5);
        assert!(ks_two_sample(&a, &c).1 < 1e-6);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sum_is_permutation_stable_to_roundoff(v in proptest::collection::vec(-1e3f64..1e3, 1..200)) {
            let mut r = v.clone();
            r.reverse();
            let tol = 1e-12 * v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            prop_assert!((sum(&v) - sum(&r)).abs() <= tol);
        }
    }
}
