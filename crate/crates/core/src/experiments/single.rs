//! Diagnostics of a single vector, reported in the common format.
//!
//! The vector is `cfg.vector` when given, otherwise a standard Gaussian
//! vector of length `n` drawn from the generator of trial 0.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checks::{rounding_family_member, rounding_stream_seed};
use super::config::ExperimentConfig;
use super::report::{row, ExperimentReport, Row};
use crate::arithmetic::{lcd, median_threshold, mrlcd, threshold, BracketStatus, LcdBracket, ThresholdReport};
use crate::ensembles::{sample_vector, EntryLaw};
use crate::error::{Error, Result};
use crate::geometry::UnitVector;
use crate::rng::trial_rng;
use crate::rounding::{centered_mu, levy_mu, Certifier, RoundingResult};

/// Which small-ball bound a rounding must preserve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingBound {
    /// Lévy concentration of signed-Bernoulli(`p`) sums.
    #[default]
    Levy,
    /// Probability of a window centered at `psi` under `cfg.law`.
    Centered,
}

fn source_note(cfg: &ExperimentConfig) -> String {
    match cfg.vector {
        Some(_) => "vector from config".into(),
        None => format!("seeded standard Gaussian vector, n = {}", cfg.n),
    }
}

fn unit_input(cfg: &ExperimentConfig) -> Result<UnitVector> {
    match &cfg.vector {
        Some(v) => UnitVector::normalize(v),
        None => {
            let g = sample_vector(cfg.n, &EntryLaw::standard_gaussian(), &mut trial_rng(cfg.master_seed, 0));
            UnitVector::normalize(g.as_slice())
        }
    }
}

fn bracket_row(b: &LcdBracket) -> Row {
    let mut r = row([("lo", b.lo), ("found", f64::from(u8::from(b.status == BracketStatus::Found)))]);
    if b.hi.is_finite() {
        r.insert("hi".into(), b.hi);
    }
    r
}

fn threshold_row(t: &ThresholdReport) -> Row {
    let mut r = row([("threshold", t.value)]);
    if let Some(c) = t.certificate {
        r.insert("t_star".into(), c.t_star);
        r.insert("levy_at_t_star".into(), c.levy_at_t_star);
    }
    r
}

/// Certified LCD bracket of the normalized input.
pub fn run_lcd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let x = unit_input(cfg)?;
    let b = lcd(&x, &cfg.lcd_params())?;
    let mut report = ExperimentReport::new("lcd", cfg);
    let r = bracket_row(&b);
    report.summary.extend(r.clone());
    report.records.push(r);
    report.set("dim", x.dim() as f64);
    report.set("horizon", cfg.lcd_params().horizon(x.dim()));
    report.notes.push(source_note(cfg));
    Ok(report.finish(start))
}

/// MRLCD of the normalized input; one record per spread block.
pub fn run_mrlcd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let v = unit_input(cfg)?;
    let m = mrlcd(&v, &cfg.lcd_params(), &cfg.sphere, cfg.lambda)?;
    let mut report = ExperimentReport::new("mrlcd", cfg);
    for (j, b) in m.per_block.iter().enumerate() {
        let mut r = bracket_row(&b.bracket);
        r.insert("block".into(), j as f64);
        r.insert("size".into(), b.block.len() as f64);
        r.insert("upper_half".into(), f64::from(u8::from(m.upper_half.contains(&j))));
        report.records.push(r);
    }
    report.summary.extend(bracket_row(&m.median_value));
    report.set("median_block", m.median_block as f64);
    report.set("num_blocks", m.per_block.len() as f64);
    report.set("block_size", m.per_block[0].block.len() as f64);
    report.notes.push(source_note(cfg));
    Ok(report.finish(start))
}

/// Threshold of the normalized input, or its median threshold over spread
/// blocks when `cfg.median_threshold` is set.
pub fn run_threshold(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let v = unit_input(cfg)?;
    let mut report = ExperimentReport::new("threshold", cfg);
    if cfg.median_threshold {
        let m = median_threshold(&v, cfg.p, cfg.l, &cfg.sphere, cfg.lambda, cfg.threshold_tol)?;
        for (j, b) in m.per_block.iter().enumerate() {
            let mut r = threshold_row(&b.report);
            r.insert("block".into(), j as f64);
            r.insert("size".into(), b.block.len() as f64);
            report.records.push(r);
        }
        report.summary.extend(threshold_row(&m.median));
        report.set("median_block", m.median_block as f64);
    } else {
        let t = threshold(&v, cfg.p, cfg.l, cfg.threshold_tol)?;
        let r = threshold_row(&t);
        report.summary.extend(r.clone());
        report.records.push(r);
    }
    report.notes.push(source_note(cfg));
    Ok(report.finish(start))
}

/// Randomized rounding of `cfg.vector` (taken as is, not normalized), or of
/// the scaled family member of dimension `n`. `mu` defaults to the smallest
/// value the bound admits before rounding. Failure to certify within
/// `cfg.max_attempts` is recorded as a violation with the best attempt.
pub fn run_round(cfg: &ExperimentConfig, bound: RoundingBound) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = ExperimentReport::new("round", cfg);
    let y = match &cfg.vector {
        Some(v) => v.clone(),
        None => {
            let (y, scale) = rounding_family_member(cfg.n, cfg.p, cfg.l, &mut trial_rng(cfg.master_seed, 0))?;
            report.set("scale", scale);
            y
        }
    };
    let mu = match (cfg.mu, bound) {
        (Some(mu), _) => mu,
        (None, RoundingBound::Levy) => levy_mu(&y, cfg.p, 1.05)?,
        (None, RoundingBound::Centered) => centered_mu(&y, &cfg.law, cfg.psi)?,
    };
    let cert = match bound {
        RoundingBound::Levy => Certifier::levy(&y, cfg.p, mu, cfg.constants)?,
        RoundingBound::Centered => Certifier::centered(&y, &cfg.law, cfg.psi, mu, cfg.constants)?,
    };
    let (certified, r): (bool, RoundingResult) = match cert.run(cfg.max_attempts, rounding_stream_seed(cfg, 0)) {
        Ok(r) => (true, r),
        Err(Error::Certification { best, .. }) => (false, *best),
        Err(e) => return Err(e),
    };
    for (i, (&a, &b)) in y.iter().zip(&r.y_prime).enumerate() {
        report.records.push(row([("index", i as f64), ("y", a), ("y_prime", b as f64)]));
    }
    report.violations = u64::from(!certified) + u64::from(r.worst_r1 > 1.0);
    report.set("certified", f64::from(u8::from(certified)));
    report.set("attempts", r.attempts as f64);
    report.set("mu", mu);
    report.set("r1", r.checks.r1);
    report.set("r2", r.checks.r2);
    report.set("r2_at", r.checks.r2_at);
    report.set("r3", r.checks.r3);
    report.set("worst_r1", r.worst_r1);
    report.set("c_upper", cfg.constants.c_upper);
    report.set("c_lower", cfg.constants.c_lower);
    report.notes.push(match cfg.vector {
        Some(_) => "vector from config".into(),
        None => format!("scaled family member, dim = {}", cfg.n),
    });
    Ok(report.finish(start))
}
