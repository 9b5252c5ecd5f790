//! Smallest-singular-value tail and exact singularity of small sign matrices.

use std::time::Instant;

use num_rational::Ratio;

use super::config::{zero_and_log_grid, ExperimentConfig};
use super::report::{map_trials, row, ExperimentReport, Frequency};
use crate::ensembles::{sample_symmetric_with, singular_extremes};
use crate::error::{Error, Result};

pub const SVAL_MAX_N: usize = 512;
pub const SVAL_MAX_TRIALS: usize = 1_000_000;
pub const SINGULARITY_MAX_N: usize = 5;

/// Whether `s_min <= eps / sqrt(n)`, with `n EPS s_max` of slack so that
/// exactly singular matrices count at `eps = 0`.
pub fn tail_event(s_min: f64, s_max: f64, n: usize, eps: f64) -> bool {
    s_min <= eps / (n as f64).sqrt() + n as f64 * f64::EPSILON * s_max
}

/// Empirical `P[s_n(A) <= eps / sqrt(n)]` along `eps_grid` (default: 0 and 16
/// log-spaced points from 1e-4 to 10), with the least `C` such that every
/// estimate is at most `C eps^{1/8} + floor`.
pub fn run_sval_tail(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.n;
    if n > SVAL_MAX_N || cfg.trials > SVAL_MAX_TRIALS {
        return Err(Error::Capacity(format!(
            "sval tail supports n <= {SVAL_MAX_N} and trials <= {SVAL_MAX_TRIALS}, got n = {n}, trials = {}",
            cfg.trials
        )));
    }
    let start = Instant::now();
    let grid = cfg.eps_or(|| zero_and_log_grid(1e-4, 10.0, 17));
    let mut report = ExperimentReport::new("sval-tail", cfg);
    let samples = map_trials(cfg, |_, rng| {
        let a = sample_symmetric_with(n, &cfg.law, rng);
        singular_extremes(&a).map(|s| (s.s_min, s.s_max))
    });
    let mut ok = Vec::with_capacity(samples.len());
    for (t, s) in samples.into_iter().enumerate() {
        let (s_min, s_max) = s?;
        report.records.push(row([("trial", t as f64), ("s_min", s_min), ("s_max", s_max)]));
        ok.push((s_min, s_max));
    }
    let mut fitted = 0.0f64;
    let mut prev = 0.0;
    for &eps in &grid {
        let hits = ok.iter().filter(|&&(lo, hi)| tail_event(lo, hi, n, eps)).count();
        let f = Frequency::new(hits, ok.len());
        if f.p < prev {
            report.violations += 1;
        }
        prev = f.p;
        let mut r = row([("eps", eps), ("probability", f.p), ("radius", f.radius)]);
        if eps > 0.0 {
            let c = (f.p - cfg.floor).max(0.0) / eps.powf(0.125);
            fitted = fitted.max(c);
            r.insert("c_at_eps".into(), c);
        }
        report.table.push(r);
    }
    report.set("fitted_c", fitted);
    report.set("floor", cfg.floor);
    report.set("monotone", (report.violations == 0) as u8 as f64);
    Ok(report.finish(start))
}

/// Exact fraction of singular symmetric `n x n` sign matrices.
pub fn singularity_exact(n: usize) -> Result<Ratio<u64>> {
    if n == 0 {
        return Err(Error::Parameter("n must be >= 1".into()));
    }
    if n > SINGULARITY_MAX_N {
        return Err(Error::Capacity(format!("exhaustive enumeration supports n <= {SINGULARITY_MAX_N}, got {n}")));
    }
    let free = n * (n + 1) / 2;
    let total = 1u64 << free;
    let mut singular = 0u64;
    let mut m = vec![0i64; n * n];
    for mask in 0..total {
        let mut bit = 0;
        for i in 0..n {
            for j in i..n {
                let v = if mask >> bit & 1 == 1 { 1 } else { -1 };
                m[i * n + j] = v;
                m[j * n + i] = v;
                bit += 1;
            }
        }
        if bareiss_det(&mut m.clone(), n) == 0 {
            singular += 1;
        }
    }
    Ok(Ratio::new(singular, total))
}

// Fraction-free elimination; every intermediate is a minor, so it stays exact.
fn bareiss_det(a: &mut [i64], n: usize) -> i64 {
    let mut sign = 1;
    let mut prev = 1i64;
    for k in 0..n.saturating_sub(1) {
        if a[k * n + k] == 0 {
            let Some(r) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                a.swap(k * n + c, r * n + c);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    sign * a[n * n - 1]
}

/// Report form of [`singularity_exact`] at `cfg.n`.
pub fn run_singularity_exact(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let q = singularity_exact(cfg.n)?;
    let mut report = ExperimentReport::new("singularity-exact", cfg);
    report.set("n", cfg.n as f64);
    report.set("numerator", *q.numer() as f64);
    report.set("denominator", *q.denom() as f64);
    report.set("probability", *q.numer() as f64 / *q.denom() as f64);
    report.notes.push(format!("exact probability {q}"));
    Ok(report.finish(start))
}
