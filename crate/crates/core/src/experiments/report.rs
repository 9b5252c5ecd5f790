use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::anticonc::hoeffding_radius;
use crate::error::Result;
use crate::rng::trial_rng;

/// Bumped whenever a field of [`ExperimentReport`] changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// One table or record row. Non-finite values are never stored.
pub type Row = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    /// Summary table, one row per grid point.
    pub table: Vec<Row>,
    /// Per-trial records in trial order.
    pub records: Vec<Row>,
    pub summary: BTreeMap<String, f64>,
    pub violations: u64,
    pub skipped: u64,
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub(crate) fn new(experiment: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            table: Vec::new(),
            records: Vec::new(),
            summary: BTreeMap::new(),
            violations: 0,
            skipped: 0,
            notes: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.get(key).copied()
    }

    pub(crate) fn set(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.summary.insert(key.into(), value);
        }
    }

    pub(crate) fn finish(mut self, start: Instant) -> Self {
        self.wall_clock_seconds = start.elapsed().as_secs_f64();
        self
    }

    /// JSON with the wall clock zeroed; equal configs and seeds give equal strings.
    pub fn canonical_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        Ok(serde_json::to_string_pretty(&r)?)
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// Summary table as CSV; columns are the union of the row keys.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.table, out)
    }

    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.records, out)
    }

    /// Writes the JSON report to `path` and the summary table beside it
    /// with extension `csv` (the records when there is no table).
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_json(std::io::BufWriter::new(std::fs::File::create(path)?))?;
        let csv = std::fs::File::create(path.with_extension("csv"))?;
        if self.table.is_empty() {
            self.write_records_csv(csv)
        } else {
            self.write_csv(csv)
        }
    }
}

fn write_rows<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut cols: Vec<&String> = rows.iter().flat_map(|r| r.keys()).collect();
    cols.sort();
    cols.dedup();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&cols)?;
    for r in rows {
        w.write_record(cols.iter().map(|c| r.get(*c).map(|v| format!("{v}")).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}

/// Builds a [`Row`], dropping non-finite values.
pub(crate) fn row<const N: usize>(pairs: [(&str, f64); N]) -> Row {
    pairs.into_iter().filter(|(_, v)| v.is_finite()).map(|(k, v)| (k.to_string(), v)).collect()
}

/// Runs `f(trial, rng)` for every trial with its derived generator, in trial order.
pub(crate) fn map_trials<T, F>(cfg: &ExperimentConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let one = |t: usize| f(t, &mut trial_rng(cfg.master_seed, t as u64));
    if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(one).collect()
    } else {
        (0..cfg.trials).map(one).collect()
    }
}

/// Empirical frequency of `hits` among `total` with its 99% radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Frequency {
    pub p: f64,
    pub radius: f64,
}

impl Frequency {
    pub fn new(hits: usize, total: usize) -> Self {
        if total == 0 {
            return Self { p: f64::NAN, radius: f64::NAN };
        }
        Self { p: hits as f64 / total as f64, radius: hoeffding_radius(total) }
    }
}
