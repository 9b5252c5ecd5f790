//! Exact and per-instance checks of the anticoncentration inequalities.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{zero_and_log_grid, ExperimentConfig};
use super::report::{map_trials, row, ExperimentReport, Frequency};
use crate::anticonc::{levy, tensorization_bound, weighted_sum_atoms, AtomDistribution, MrlcdBound};
use crate::arithmetic::{mrlcd, threshold, BracketStatus};
use crate::ensembles::{sample_vector, EntryLaw};
use crate::error::{Error, Result};
use crate::geometry::{is_compressible, UnitVector};
use crate::rng::derive_seed;
use crate::rounding::{levy_mu, Certifier, RoundingResult};

pub const TENSORIZATION_MAX_N: usize = 6;
pub const SMALLBALL_MAX_J: usize = 24;
pub const ROUNDING_MAX_DIM: usize = 12;
/// Scale factor between the block threshold and the rounding scale.
pub const ROUNDING_SCALE: f64 = 3.0;

/// `sup_c P[|X - c| <= r]` for `X = (w_k b_k)` with Rademacher `b_k`, over
/// the centers `c` with coordinates in `{-w_k, 0, w_k}`.
pub fn face_center_concentration(w: &[f64], r: f64) -> f64 {
    let n = w.len();
    let r2 = r * r;
    let patterns = 1usize << n;
    let mut best = 0usize;
    let mut center = vec![0i8; n];
    loop {
        let hits = (0..patterns)
            .filter(|&s| {
                let d2: f64 = (0..n)
                    .map(|k| {
                        let x = if s >> k & 1 == 1 { w[k] } else { -w[k] };
                        let c = f64::from(center[k]) * w[k];
                        (x - c) * (x - c)
                    })
                    .sum();
                d2 <= r2
            })
            .count();
        best = best.max(hits);
        // next center in base 3
        let mut k = 0;
        while k < n && center[k] == 1 {
            center[k] = -1;
            k += 1;
        }
        if k == n {
            break;
        }
        center[k] += 1;
    }
    best as f64 / patterns as f64
}

/// Tensorization for `X_k = w_k b_k` with Rademacher `b_k` and weights in
/// `[0.2, 2]`, `N = 1 + t mod n` coordinates in trial `t`. Two coefficient
/// choices are checked at every width: the pointwise `(0, L(X_k, eps))` and
/// the uniform-in-eps `(1/(2 w_k), 1/2)`. The default grid is 0 and 49
/// log-spaced widths from 1e-3 to 10.
pub fn run_tensorization_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.n > TENSORIZATION_MAX_N {
        return Err(Error::Capacity(format!(
            "exact tensorization supports N <= {TENSORIZATION_MAX_N}, got {}",
            cfg.n
        )));
    }
    let start = Instant::now();
    let grid = cfg.eps_or(|| zero_and_log_grid(1e-3, 10.0, 50));
    let per_trial = map_trials(cfg, |t, rng| {
        let dim = 1 + t % cfg.n;
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.2..2.0)).collect();
        let coords: Vec<AtomDistribution> =
            w.iter().map(|&x| AtomDistribution::from_pairs([(-x, 0.5), (x, 0.5)])).collect();
        let uniform: Vec<(f64, f64)> = w.iter().map(|&x| (0.5 / x, 0.5)).collect();
        let pts: Vec<(f64, f64, f64)> = grid
            .iter()
            .map(|&eps| {
                let lhs = face_center_concentration(&w, eps * (dim as f64).sqrt());
                let pointwise: Vec<(f64, f64)> = coords.iter().map(|d| (0.0, levy(d, eps))).collect();
                (lhs, tensorization_bound(&pointwise, eps), tensorization_bound(&uniform, eps))
            })
            .collect();
        (dim, pts)
    });
    let mut report = ExperimentReport::new("tensorization", cfg);
    let mut min_slack = f64::INFINITY;
    let mut worst = vec![(0.0f64, 0.0f64); grid.len()];
    for (t, (dim, pts)) in per_trial.into_iter().enumerate() {
        let mut slack = f64::INFINITY;
        for (k, &(lhs, pw, un)) in pts.iter().enumerate() {
            report.violations += u64::from(lhs > pw) + u64::from(lhs > un);
            slack = slack.min(pw.min(un) / lhs);
            worst[k] = (worst[k].0.max(lhs / pw), worst[k].1.max(lhs / un));
        }
        min_slack = min_slack.min(slack);
        report.records.push(row([("trial", t as f64), ("N", dim as f64), ("min_bound_over_lhs", slack)]));
    }
    for (k, &eps) in grid.iter().enumerate() {
        report.table.push(row([("eps", eps), ("max_lhs_over_pointwise", worst[k].0), ("max_lhs_over_uniform", worst[k].1)]));
    }
    report.set("min_bound_over_lhs", min_slack);
    report.notes.push("vector concentration maximized over centers with coordinates in {-w_k, 0, w_k}".into());
    Ok(report.finish(start))
}

fn incompressible_gaussian(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Option<UnitVector>> {
    let gaussian = EntryLaw::standard_gaussian();
    for _ in 0..100 {
        let v = UnitVector::normalize(sample_vector(cfg.n, &gaussian, rng).as_slice())?;
        if !is_compressible(&v, &cfg.sphere) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Exact `L(S_J, eps)` for `S_J = sum_{j in J} xi_j v_j`, `xi` from `cfg.law`,
/// against the MRLCD bound with `C = 1`, over every union `J` of upper-half
/// blocks with `|J| <= 24`. The MRLCD enters through the upper end of its
/// bracket, which can only shrink the bound. The fitted constant is the
/// largest ratio; a ratio above `cfg.ratio_cap` is a violation. The default
/// grid is 0 and 19 log-spaced widths from 1e-3 to 1.
pub fn run_mrlcd_smallball_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let grid = cfg.eps_or(|| zero_and_log_grid(1e-3, 1.0, 20));
    let params = cfg.lcd_params();
    let bound = MrlcdBound { constant: 1.0, l: cfg.l, lambda: cfg.lambda, n: cfg.n };
    type TrialOut = Option<(f64, BracketStatus, usize, Vec<f64>)>;
    let per_trial = map_trials(cfg, |_, rng| -> Result<TrialOut> {
        let Some(v) = incompressible_gaussian(cfg, rng)? else {
            return Ok(None);
        };
        let rep = mrlcd(&v, &params, &cfg.sphere, cfg.lambda)?;
        let b = rep.median_value;
        let d = if b.hi.is_finite() { b.hi } else { b.lo };
        let upper = &rep.upper_half;
        if upper.len() > 16 {
            return Err(Error::Capacity(format!("{} upper-half blocks", upper.len())));
        }
        let mut ratios = vec![0.0f64; grid.len()];
        let mut sets = 0;
        for mask in 1usize..1 << upper.len() {
            let j: Vec<usize> = (0..upper.len())
                .filter(|k| mask >> k & 1 == 1)
                .flat_map(|k| rep.per_block[upper[k]].block.iter().copied())
                .collect();
            if j.len() > SMALLBALL_MAX_J {
                continue;
            }
            sets += 1;
            let w: Vec<f64> = j.iter().map(|&i| v.coords()[i]).collect();
            let s = weighted_sum_atoms(&w, &cfg.law)?;
            for (k, &eps) in grid.iter().enumerate() {
                ratios[k] = ratios[k].max(levy(&s, eps) / bound.eval(eps, j.len(), d));
            }
        }
        Ok(Some((d, b.status, sets, ratios)))
    });
    let mut report = ExperimentReport::new("mrlcd-smallball", cfg);
    let mut worst = vec![0.0f64; grid.len()];
    for (t, out) in per_trial.into_iter().enumerate() {
        match out? {
            None => {
                report.skipped += 1;
                report.records.push(row([("trial", t as f64), ("skipped", 1.0)]));
            }
            Some((d, status, sets, ratios)) => {
                let m = ratios.iter().cloned().fold(0.0, f64::max);
                report.violations += ratios.iter().filter(|&&r| !(r <= cfg.ratio_cap)).count() as u64;
                for (w, r) in worst.iter_mut().zip(&ratios) {
                    *w = w.max(*r);
                }
                report.records.push(row([
                    ("trial", t as f64),
                    ("mrlcd", d),
                    ("mrlcd_found", f64::from(u8::from(status == BracketStatus::Found))),
                    ("unions", sets as f64),
                    ("fitted_c", m),
                ]));
            }
        }
    }
    for (k, &eps) in grid.iter().enumerate() {
        report.table.push(row([("eps", eps), ("fitted_c", worst[k])]));
    }
    report.set("fitted_c", worst.iter().cloned().fold(0.0, f64::max));
    report.set("ratio_cap", cfg.ratio_cap);
    Ok(report.finish(start))
}

/// One member of the rounding family: the unit vector `u` of dimension `m`,
/// scaled by `3 sqrt(m) / T_{p,L}(u)`.
pub fn rounding_family_member(dim: usize, p: f64, l: f64, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
    let u = UnitVector::normalize(sample_vector(dim, &EntryLaw::standard_gaussian(), rng).as_slice())?;
    let t = threshold(&u, p, l, 1e-9)?.value;
    let scale = ROUNDING_SCALE * (dim as f64).sqrt() / t;
    let y: Vec<f64> = u.coords().iter().map(|x| x * scale).collect();
    Ok((y, scale))
}

// Keeps the candidate streams apart from the trial generators.
const ROUNDING_STREAM_SALT: u64 = 0x726f_756e_6469_6e67;

/// Seed of the candidate stream for trial `t`.
pub fn rounding_stream_seed(cfg: &ExperimentConfig, t: usize) -> u64 {
    derive_seed(cfg.master_seed ^ ROUNDING_STREAM_SALT, t as u64)
}

/// Lévy rounding over the family of [`rounding_family_member`] with
/// dimension `1 + t mod n`, `mu` from [`levy_mu`] (or `cfg.mu`). Reports the
/// certification rate; any attempt with `|y - y'|_inf > 1` is a violation.
pub fn run_rounding_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.n > ROUNDING_MAX_DIM {
        return Err(Error::Capacity(format!("rounding family supports dim <= {ROUNDING_MAX_DIM}, got {}", cfg.n)));
    }
    let start = Instant::now();
    let per_trial = map_trials(cfg, |t, rng| -> Result<(usize, f64, bool, RoundingResult)> {
        let dim = 1 + t % cfg.n;
        let (y, scale) = rounding_family_member(dim, cfg.p, cfg.l, rng)?;
        let mu = match cfg.mu {
            Some(mu) => mu,
            None => levy_mu(&y, cfg.p, 1.05)?,
        };
        let cert = Certifier::levy(&y, cfg.p, mu, cfg.constants)?;
        match cert.run(cfg.max_attempts, rounding_stream_seed(cfg, t)) {
            Ok(r) => Ok((dim, scale, true, r)),
            Err(Error::Certification { best, .. }) => Ok((dim, scale, false, *best)),
            Err(e) => Err(e),
        }
    });
    let mut report = ExperimentReport::new("rounding", cfg);
    let (mut certified, mut worst_r1, mut total) = (0usize, 0.0f64, 0usize);
    let mut attempts = 0usize;
    for (t, res) in per_trial.into_iter().enumerate() {
        let (dim, scale, ok, r) = res?;
        total += 1;
        certified += usize::from(ok);
        worst_r1 = worst_r1.max(r.worst_r1);
        attempts += if ok { r.attempts } else { cfg.max_attempts };
        report.violations += u64::from(r.worst_r1 > 1.0);
        report.records.push(row([
            ("trial", t as f64),
            ("dim", dim as f64),
            ("scale", scale),
            ("mu", r.mu),
            ("certified", f64::from(u8::from(ok))),
            ("attempts", r.attempts as f64),
            ("r1", r.checks.r1),
            ("r2", r.checks.r2),
            ("r2_at", r.checks.r2_at),
            ("r3", r.checks.r3),
            ("worst_r1", r.worst_r1),
        ]));
    }
    let f = Frequency::new(certified, total);
    report.set("certified_rate", f.p);
    report.set("radius", f.radius);
    report.set("worst_r1", worst_r1);
    report.set("mean_attempts", attempts as f64 / total as f64);
    report.set("c_upper", cfg.constants.c_upper);
    report.set("c_lower", cfg.constants.c_lower);
    Ok(report.finish(start))
}
