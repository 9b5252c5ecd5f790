//! Arithmetic structure of `A^{-1} X` against fixed and random baselines.

use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::report::{map_trials, row, ExperimentReport, Frequency, Row};
use crate::arithmetic::{median_threshold, mrlcd, BracketStatus, LcdBracket, MrlcdReport};
use crate::ensembles::{sample_symmetric_with, sample_vector, solve_checked, EntryLaw};
use crate::error::{Error, Result};
use crate::geometry::UnitVector;

pub const STRUCTURE_MAX_N: usize = 256;
/// Largest block on which the median threshold is computed.
pub const THRESHOLD_MAX_BLOCK: usize = 16;

#[allow(clippy::large_enum_variant)]
enum Outcome {
    SolveFailed,
    Structural,
    Done { x0: MrlcdReport, random: Option<MrlcdReport>, threshold: Option<f64> },
}

fn bracket_cols(prefix: &str, b: &LcdBracket, r: &mut Row) {
    r.insert(format!("{prefix}_lo"), b.lo);
    if b.hi.is_finite() {
        r.insert(format!("{prefix}_hi"), b.hi);
    }
    r.insert(format!("{prefix}_found"), f64::from(u8::from(b.status == BracketStatus::Found)));
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// Per trial: `x0 = A^{-1} X / |A^{-1} X|` for `A` and `X` drawn from
/// `cfg.law`, its MRLCD, and the MRLCD of a normalized Gaussian vector. The
/// all-ones MRLCD is computed once. A trial counts as exceeding a baseline
/// when the median bracket of `x0` lies entirely above the baseline's.
pub fn run_structure_scan(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.n;
    if n > STRUCTURE_MAX_N {
        return Err(Error::Capacity(format!("structure scan supports n <= {STRUCTURE_MAX_N}, got {n}")));
    }
    let start = Instant::now();
    let params = cfg.lcd_params();
    let diag = |v: &UnitVector| mrlcd(v, &params, &cfg.sphere, cfg.lambda);
    let ones = diag(&UnitVector::normalize(&vec![1.0; n])?)?;
    let block = ones.per_block[0].block.len();
    let with_threshold = cfg.median_threshold && block <= THRESHOLD_MAX_BLOCK;
    let gaussian = EntryLaw::standard_gaussian();

    let outcomes = map_trials(cfg, |_, rng: &mut ChaCha8Rng| -> Result<Outcome> {
        let a = sample_symmetric_with(n, &cfg.law, rng);
        let x = sample_vector(n, &cfg.law, rng);
        let g = sample_vector(n, &gaussian, rng);
        let Ok(y) = solve_checked(&a, &x) else {
            return Ok(Outcome::SolveFailed);
        };
        let x0 = UnitVector::normalize(y.as_slice())?;
        let x0_report = match diag(&x0) {
            Ok(r) => r,
            Err(Error::Structural(_)) => return Ok(Outcome::Structural),
            Err(e) => return Err(e),
        };
        let random = match diag(&UnitVector::normalize(g.as_slice())?) {
            Ok(r) => Some(r),
            Err(Error::Structural(_)) => None,
            Err(e) => return Err(e),
        };
        let threshold = if with_threshold {
            Some(median_threshold(&x0, cfg.p, cfg.l, &cfg.sphere, cfg.lambda, cfg.threshold_tol)?.median.value)
        } else {
            None
        };
        Ok(Outcome::Done { x0: x0_report, random, threshold })
    });

    let mut report = ExperimentReport::new("structure-scan", cfg);
    let ones_b = ones.median_value;
    let (mut solve_skips, mut structural_skips) = (0u64, 0u64);
    let (mut done, mut above_ones, mut above_random, mut random_above_ones, mut random_done) = (0, 0, 0, 0, 0);
    let (mut x0_vals, mut random_vals) = (Vec::new(), Vec::new());
    for (t, o) in outcomes.into_iter().enumerate() {
        let mut rec = row([("trial", t as f64)]);
        match o? {
            Outcome::SolveFailed => {
                solve_skips += 1;
                rec.insert("skipped".into(), 1.0);
            }
            Outcome::Structural => {
                structural_skips += 1;
                rec.insert("skipped".into(), 2.0);
            }
            Outcome::Done { x0, random, threshold } => {
                done += 1;
                let b = x0.median_value;
                bracket_cols("x0", &b, &mut rec);
                x0_vals.push(b.estimate());
                let beats_ones = b.lo > ones_b.hi;
                above_ones += usize::from(beats_ones);
                rec.insert("x0_above_ones".into(), f64::from(u8::from(beats_ones)));
                if let Some(r) = random {
                    let rb = r.median_value;
                    bracket_cols("random", &rb, &mut rec);
                    random_vals.push(rb.estimate());
                    random_done += 1;
                    above_random += usize::from(b.lo > rb.hi);
                    random_above_ones += usize::from(rb.lo > ones_b.hi);
                }
                if let Some(th) = threshold {
                    rec.insert("x0_median_threshold".into(), th);
                }
            }
        }
        report.records.push(rec);
    }
    report.skipped = solve_skips + structural_skips;
    x0_vals.sort_by(f64::total_cmp);
    random_vals.sort_by(f64::total_cmp);
    for q in [0.05, 0.25, 0.5, 0.75, 0.95] {
        report.table.push(row([
            ("quantile", q),
            ("x0_mrlcd", quantile(&x0_vals, q)),
            ("random_mrlcd", quantile(&random_vals, q)),
            ("ones_mrlcd", ones_b.estimate()),
        ]));
    }
    let f = Frequency::new(above_ones, done);
    report.set("block_size", block as f64);
    report.set("num_blocks", ones.per_block.len() as f64);
    report.set("ones_lo", ones_b.lo);
    report.set("ones_hi", ones_b.hi);
    report.set("frac_x0_above_ones", f.p);
    report.set("radius", f.radius);
    report.set("frac_x0_above_random", Frequency::new(above_random, random_done).p);
    report.set("frac_random_above_ones", Frequency::new(random_above_ones, random_done).p);
    report.set("median_x0_mrlcd", quantile(&x0_vals, 0.5));
    report.set("median_random_mrlcd", quantile(&random_vals, 0.5));
    report.set("solve_skips", solve_skips as f64);
    report.set("structural_skips", structural_skips as f64);
    if cfg.median_threshold && !with_threshold {
        report.notes.push(format!("median threshold skipped: block size {block} exceeds {THRESHOLD_MAX_BLOCK}"));
    }
    Ok(report.finish(start))
}
