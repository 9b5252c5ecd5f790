//! Small-ball behaviour of the normalized quadratic form and the row-distance identity.

use std::time::Instant;

use super::config::{zero_and_log_grid, ExperimentConfig, QuadraticTarget};
use super::report::{map_trials, row, ExperimentReport, Frequency};
use crate::ensembles::{
    border_matrix, distance_to_rowspan, quadratic_distance_identity, sample_symmetric_with, sample_vector,
    singular_extremes, solve_checked,
};
use crate::error::{Error, Result};

pub const QUADRATIC_MAX_N: usize = 256;
/// Agreement required between the statistic and the projection distance.
pub const IDENTITY_TOL: f64 = 1e-8;

enum Trial {
    NormEvent,
    Skipped,
    Kept { stat: f64, direct: f64, s_min: f64 },
}

/// Empirical `P[|<A^{-1}X,X> - u| / sqrt(1 + |A^{-1}X|^2) <= eps]` over trials
/// with `|A| <= K sqrt(n)`.
///
/// Every kept trial is cross-checked against the bordered matrix `M` with
/// corner `u` and border `X`: the statistic must equal the distance from the
/// first row of `M` to the span of the others within [`IDENTITY_TOL`], and
/// `s_min(M)` cannot exceed it. Disagreements are violations. The default
/// grid is 0 and 16 log-spaced points from 1e-4 to 10.
pub fn run_quadratic_smallball(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.n;
    if n > QUADRATIC_MAX_N {
        return Err(Error::Capacity(format!("quadratic small-ball supports n <= {QUADRATIC_MAX_N}, got {n}")));
    }
    let start = Instant::now();
    let grid = cfg.eps_or(|| zero_and_log_grid(1e-4, 10.0, 17));
    let bound = cfg.k * (n as f64).sqrt();
    let trials = map_trials(cfg, |_, rng| -> Result<Trial> {
        let a = sample_symmetric_with(n, &cfg.law, rng);
        let x = sample_vector(n, &cfg.law, rng);
        if singular_extremes(&a)?.s_max > bound {
            return Ok(Trial::NormEvent);
        }
        let Ok(y) = solve_checked(&a, &x) else {
            return Ok(Trial::Skipped);
        };
        let q = y.dot(&x);
        let u = match cfg.u {
            QuadraticTarget::Fixed(u) => u,
            QuadraticTarget::Realized => q,
        };
        let stat = (q - u).abs() / (1.0 + y.norm_squared()).sqrt();
        let m = border_matrix(&a, &x, u);
        Ok(Trial::Kept { stat, direct: distance_to_rowspan(&m, 0)?, s_min: singular_extremes(&m)?.s_min })
    });
    let mut report = ExperimentReport::new("quadratic", cfg);
    let mut stats = Vec::new();
    let (mut mismatches, mut smin_breaks, mut outside) = (0u64, 0u64, 0u64);
    let mut max_diff = 0.0f64;
    for (t, tr) in trials.into_iter().enumerate() {
        match tr? {
            Trial::NormEvent => {
                outside += 1;
                report.records.push(row([("trial", t as f64), ("norm_event", 0.0)]));
            }
            Trial::Skipped => {
                report.skipped += 1;
                report.records.push(row([("trial", t as f64), ("skipped", 1.0)]));
            }
            Trial::Kept { stat, direct, s_min } => {
                let diff = (stat - direct).abs();
                max_diff = max_diff.max(diff);
                mismatches += u64::from(diff > IDENTITY_TOL * stat.max(1.0));
                smin_breaks += u64::from(s_min > stat * (1.0 + IDENTITY_TOL) + IDENTITY_TOL);
                stats.push(stat);
                report.records.push(row([
                    ("trial", t as f64),
                    ("norm_event", 1.0),
                    ("statistic", stat),
                    ("distance", direct),
                    ("bordered_s_min", s_min),
                ]));
            }
        }
    }
    let mut fitted = 0.0f64;
    let mut prev = 0.0;
    let mut nonmonotone = 0u64;
    for &eps in &grid {
        let f = Frequency::new(stats.iter().filter(|&&s| s <= eps).count(), stats.len());
        nonmonotone += u64::from(f.p < prev);
        prev = f.p;
        let mut r = row([("eps", eps), ("probability", f.p), ("radius", f.radius)]);
        if eps > 0.0 && !stats.is_empty() {
            let c = f.p / eps.powf(0.125);
            fitted = fitted.max(c);
            r.insert("c_at_eps".into(), c);
        }
        report.table.push(r);
    }
    report.violations = mismatches + smin_breaks + nonmonotone;
    report.set("kept", stats.len() as f64);
    report.set("outside_norm_event", outside as f64);
    report.set("fitted_c", fitted);
    report.set("identity_mismatches", mismatches as f64);
    report.set("max_identity_diff", max_diff);
    report.set("s_min_above_statistic", smin_breaks as f64);
    Ok(report.finish(start))
}

/// Row-distance identity on `cfg.trials` matrices from `cfg.law`: trial `t`
/// has dimension `2 + t mod (n - 1)` and removes row `t mod dim`. A
/// difference above [`IDENTITY_TOL`] is a violation; failed solves are
/// skipped and counted.
pub fn run_identity_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.n;
    if !(2..=QUADRATIC_MAX_N).contains(&n) {
        return Err(Error::Capacity(format!("identity check supports 2 <= n <= {QUADRATIC_MAX_N}, got {n}")));
    }
    let start = Instant::now();
    let trials = map_trials(cfg, |t, rng| {
        let dim = 2 + t % (n - 1);
        let i = t % dim;
        let a = sample_symmetric_with(dim, &cfg.law, rng);
        (dim, i, quadratic_distance_identity(&a, i))
    });
    let mut report = ExperimentReport::new("identity", cfg);
    let mut max_diff = 0.0f64;
    for (t, (dim, i, res)) in trials.into_iter().enumerate() {
        let mut rec = row([("trial", t as f64), ("n", dim as f64), ("row", i as f64)]);
        match res {
            Ok(q) => {
                let diff = (q.direct - q.formula).abs();
                max_diff = max_diff.max(diff);
                report.violations += u64::from(!(diff <= IDENTITY_TOL));
                rec.extend(row([("direct", q.direct), ("formula", q.formula), ("diff", diff)]));
            }
            Err(Error::Precondition(_)) => {
                report.skipped += 1;
                rec.insert("skipped".into(), 1.0);
            }
            Err(e) => return Err(e),
        }
        report.records.push(rec);
    }
    report.set("max_diff", max_diff);
    report.set("tolerance", IDENTITY_TOL);
    Ok(report.finish(start))
}
