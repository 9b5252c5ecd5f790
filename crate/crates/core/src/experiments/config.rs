use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arithmetic::LcdParams;
use crate::ensembles::EntryLaw;
use crate::error::{Error, Result};
use crate::geometry::SphereParams;
use crate::rounding::CertConstants;

/// Target `u` of the quadratic-form statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum QuadraticTarget {
    Fixed(f64),
    /// `u = <A^{-1}X, X>` of the same trial.
    Realized,
}

/// Configuration shared by every runner. Fields a runner does not read are
/// echoed but otherwise ignored; an empty `eps_grid` or `r_grid` selects the
/// runner's default grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub n: usize,
    pub law: EntryLaw,
    pub trials: usize,
    pub master_seed: u64,
    pub eps_grid: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub lambda: f64,
    pub p: f64,
    pub sphere: SphereParams,
    /// Operator-norm event `|A| <= K sqrt(n)`.
    #[serde(rename = "K")]
    pub k: f64,
    pub out: Option<PathBuf>,

    /// Input vector for the single-vector subcommands.
    pub vector: Option<Vec<f64>>,
    /// Decoupling index set `J` (0-based); random subsets of every size when absent.
    pub subset: Option<Vec<usize>>,
    pub p_values: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub u: QuadraticTarget,
    /// Additive floor in the fitted tail `C eps^{1/8} + floor`.
    pub floor: f64,
    pub mu: Option<f64>,
    pub psi: f64,
    pub constants: CertConstants,
    pub max_attempts: usize,
    /// Cap on fitted ratios in the replacement and MRLCD checks.
    pub ratio_cap: f64,
    /// Integer entries of decoupling matrices lie in `[-int_range, int_range]`.
    pub int_range: i64,
    pub lcd_grid_step: f64,
    pub lcd_bisect_tol: f64,
    pub theta_max: Option<f64>,
    pub threshold_tol: f64,
    pub median_threshold: bool,
    /// Runs trials on the rayon pool. Not echoed: it never changes results.
    #[serde(skip_serializing)]
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lcd = LcdParams::new(1.0);
        Self {
            name: "experiment".into(),
            n: 64,
            law: EntryLaw::Rademacher,
            trials: 1000,
            master_seed: 0,
            eps_grid: Vec::new(),
            l: 1.0,
            lambda: 0.125,
            p: 0.1,
            sphere: SphereParams { c0: 0.1, c1: 0.5, c_spread: 0.19 },
            k: 3.0,
            out: None,
            vector: None,
            subset: None,
            p_values: vec![0.05, 0.1, 0.14],
            r_grid: Vec::new(),
            u: QuadraticTarget::Fixed(0.0),
            floor: 0.0,
            mu: None,
            psi: 0.0,
            constants: CertConstants::default(),
            max_attempts: 1000,
            ratio_cap: 100.0,
            int_range: 3,
            lcd_grid_step: lcd.grid_step,
            lcd_bisect_tol: lcd.bisect_tol,
            theta_max: None,
            threshold_tol: 1e-9,
            median_threshold: false,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.eps_grid.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return bad("eps_grid entries must be finite and >= 0".into());
        }
        if self.eps_grid.windows(2).any(|w| w[0] > w[1]) {
            return bad("eps_grid must be sorted ascending".into());
        }
        if self.r_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("r_grid entries must be finite and > 0".into());
        }
        if !(self.k >= 1.0) {
            return bad(format!("K must be >= 1, got {}", self.k));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return bad(format!("L must be positive, got {}", self.l));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p must lie in (0, 1), got {}", self.p));
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be >= 1".into());
        }
        if !(self.ratio_cap > 0.0) || self.int_range < 0 || !(self.floor >= 0.0) {
            return bad("ratio_cap must be > 0, int_range and floor >= 0".into());
        }
        self.law.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.sphere.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.lcd_params().validate(1).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn lcd_params(&self) -> LcdParams {
        LcdParams { l: self.l, theta_max: self.theta_max, grid_step: self.lcd_grid_step, bisect_tol: self.lcd_bisect_tol }
    }

    /// `eps_grid`, or `default` when it is empty.
    pub fn eps_or(&self, default: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
        if self.eps_grid.is_empty() {
            default()
        } else {
            self.eps_grid.clone()
        }
    }
}

/// `0` followed by `points - 1` log-spaced values from `lo` to `hi`.
pub fn zero_and_log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid(lo, hi, points - 1));
    g
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect()
}
