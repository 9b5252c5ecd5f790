//! Exact comparison of Rademacher and signed-Bernoulli Lévy concentration.

use std::time::Instant;

use rand::Rng;

use super::config::{log_grid, ExperimentConfig};
use super::report::{map_trials, row, ExperimentReport};
use crate::anticonc::{levy, weighted_sum_atoms};
use crate::ensembles::EntryLaw;
use crate::error::{Error, Result};

pub const REPLACEMENT_MAX_DIM: usize = 12;

/// Largest `p` covered by the replacement inequality, `(2 - sqrt 2) / 4`.
pub fn replacement_p_max() -> f64 {
    (2.0 - std::f64::consts::SQRT_2) / 4.0
}

/// `L(sum b_i v_i, r) / L(sum b'_i v_i, r)` for Rademacher `b` and signed-Bernoulli `b'`.
pub fn replacement_ratio(v: &[f64], p: f64, r: f64) -> Result<f64> {
    let rad = weighted_sum_atoms(v, &EntryLaw::Rademacher)?;
    let sb = weighted_sum_atoms(v, &EntryLaw::SignedBernoulli { p })?;
    Ok(levy(&rad, r) / levy(&sb, r))
}

/// Trial `t` draws a unit vector of dimension `1 + t mod n`; trials cycle
/// through uniform, small-integer and constant coordinates before
/// normalizing. The default `r_grid` is 20 log-spaced widths from 1e-3 to 2.
pub fn run_replacement_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.n > REPLACEMENT_MAX_DIM {
        return Err(Error::Capacity(format!("exact replacement supports dim <= {REPLACEMENT_MAX_DIM}, got {}", cfg.n)));
    }
    let p_max = replacement_p_max();
    if let Some(p) = cfg.p_values.iter().find(|&&p| !(p > 0.0 && p <= p_max)) {
        return Err(Error::Precondition(format!("p = {p} outside (0, (2 - sqrt 2)/4]")));
    }
    let start = Instant::now();
    let r_grid = if cfg.r_grid.is_empty() { log_grid(1e-3, 2.0, 20) } else { cfg.r_grid.clone() };
    let per_trial = map_trials(cfg, |t, rng| -> Result<Vec<Vec<f64>>> {
        let dim = 1 + t % cfg.n;
        let raw: Vec<f64> = (0..dim)
            .map(|_| match t % 3 {
                0 => rng.gen_range(-1.0..1.0),
                1 => rng.gen_range(1..=3) as f64 * if rng.gen::<bool>() { 1.0 } else { -1.0 },
                _ => 1.0,
            })
            .collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let rad = weighted_sum_atoms(&v, &EntryLaw::Rademacher)?;
        cfg.p_values
            .iter()
            .map(|&p| {
                let sb = weighted_sum_atoms(&v, &EntryLaw::SignedBernoulli { p })?;
                Ok(r_grid.iter().map(|&r| levy(&rad, r) / levy(&sb, r)).collect())
            })
            .collect()
    });
    let mut report = ExperimentReport::new("replace", cfg);
    let mut worst = vec![vec![0.0f64; r_grid.len()]; cfg.p_values.len()];
    for (t, ratios) in per_trial.into_iter().enumerate() {
        let ratios = ratios?;
        let mut rec = row([("trial", t as f64), ("dim", (1 + t % cfg.n) as f64)]);
        for (pi, rs) in ratios.iter().enumerate() {
            let mut m = 0.0f64;
            for (k, &x) in rs.iter().enumerate() {
                if !x.is_finite() || x > cfg.ratio_cap {
                    report.violations += 1;
                }
                worst[pi][k] = worst[pi][k].max(x);
                m = m.max(x);
            }
            rec.insert(format!("max_ratio_p{}", cfg.p_values[pi]), m);
        }
        report.records.push(rec);
    }
    for (pi, &p) in cfg.p_values.iter().enumerate() {
        for (k, &r) in r_grid.iter().enumerate() {
            report.table.push(row([("p", p), ("r", r), ("max_ratio", worst[pi][k])]));
        }
    }
    report.set("max_ratio", worst.iter().flatten().cloned().fold(0.0, f64::max));
    report.set("ratio_cap", cfg.ratio_cap);
    report.set("p_max", p_max);
    Ok(report.finish(start))
}
