//! Size of `A^{-1} X` relative to the Hilbert-Schmidt norm of `A^{-1}`.

use std::time::Instant;

use super::config::ExperimentConfig;
use super::report::{map_trials, row, ExperimentReport, Frequency};
use crate::ensembles::{hilbert_schmidt_norm, sample_symmetric_with, sample_vector, singular_extremes, solve_checked};
use crate::error::{Error, Result};

pub const DENOMINATOR_MAX_N: usize = 256;

enum Trial {
    NormEvent,
    Skipped,
    Kept { norm: f64, hs: f64 },
}

/// Frequencies of `|A^{-1}X| >= eps`, `|A^{-1}X| <= eps^{-1/2} |A^{-1}|_HS`
/// and `|A^{-1}X| >= eps |A^{-1}|_HS` over trials with `|A| <= K sqrt(n)`.
///
/// The second event has probability at least `1 - eps` for isotropic `X`
/// (Markov, since `E|A^{-1}X|^2 = |A^{-1}|_HS^2`); a rate below
/// `1 - eps - radius` is a violation. The other two are reported with
/// fitted constants: the smallest norm seen and
/// `max_eps (1 - rate_3) / eps`. The default grid is
/// `0.01, 0.02, 0.05, 0.1, 0.25, 0.5, 1`.
pub fn run_denominator_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.n;
    if n > DENOMINATOR_MAX_N {
        return Err(Error::Capacity(format!("denominator check supports n <= {DENOMINATOR_MAX_N}, got {n}")));
    }
    let start = Instant::now();
    let grid = cfg.eps_or(|| vec![0.01, 0.02, 0.05, 0.1, 0.25, 0.5, 1.0]);
    let bound = cfg.k * (n as f64).sqrt();
    let var = cfg.law.variance();
    let trials = map_trials(cfg, |_, rng| -> Result<Trial> {
        let a = sample_symmetric_with(n, &cfg.law, rng);
        let x = sample_vector(n, &cfg.law, rng);
        if singular_extremes(&a)?.s_max > bound {
            return Ok(Trial::NormEvent);
        }
        let (Some(inv), Ok(y)) = (a.clone().try_inverse(), solve_checked(&a, &x)) else {
            return Ok(Trial::Skipped);
        };
        // X has covariance var * I, so E|A^{-1}X|^2 = var |A^{-1}|_HS^2
        Ok(Trial::Kept { norm: y.norm(), hs: hilbert_schmidt_norm(&inv) * var.sqrt() })
    });
    let mut report = ExperimentReport::new("denominator", cfg);
    let mut kept = Vec::new();
    let mut outside = 0u64;
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
            Trial::Kept { norm, hs } => {
                kept.push((norm, hs));
                report.records.push(row([
                    ("trial", t as f64),
                    ("norm_event", 1.0),
                    ("norm", norm),
                    ("hs", hs),
                    ("ratio_sq", (norm / hs).powi(2)),
                ]));
            }
        }
    }
    let total = kept.len();
    let mut fitted3 = 0.0f64;
    for &eps in &grid {
        let b1 = Frequency::new(kept.iter().filter(|(y, _)| *y >= eps).count(), total);
        let b2 = Frequency::new(kept.iter().filter(|(y, hs)| eps == 0.0 || *y <= hs / eps.sqrt()).count(), total);
        let b3 = Frequency::new(kept.iter().filter(|(y, hs)| *y >= eps * hs).count(), total);
        let floor = 1.0 - eps - b2.radius;
        if total > 0 && b2.p < floor {
            report.violations += 1;
        }
        if eps > 0.0 && total > 0 {
            fitted3 = fitted3.max((1.0 - b3.p) / eps);
        }
        report.table.push(row([
            ("eps", eps),
            ("rate_lower_abs", b1.p),
            ("rate_upper_hs", b2.p),
            ("rate_upper_hs_floor", floor),
            ("rate_lower_hs", b3.p),
            ("radius", b2.radius),
        ]));
    }
    let ratios: Vec<f64> = kept.iter().map(|(y, hs)| (y / hs).powi(2)).collect();
    let mean = ratios.iter().sum::<f64>() / total.max(1) as f64;
    let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / total.saturating_sub(1).max(1) as f64).sqrt();
    report.set("kept", total as f64);
    report.set("outside_norm_event", outside as f64);
    report.set("min_norm", kept.iter().map(|k| k.0).fold(f64::INFINITY, f64::min));
    report.set("fitted_c_lower_hs", fitted3);
    report.set("markov_mean_ratio", mean);
    report.set("markov_mean_stderr", sd / (total.max(1) as f64).sqrt());
    Ok(report.finish(start))
}
