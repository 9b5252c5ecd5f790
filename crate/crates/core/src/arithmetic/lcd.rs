//! Least common denominator with certified brackets.
//!
//! `D_L(x) = inf { theta > 0 : dist(theta x, Z^N) < L sqrt(log_+(theta / L)) }`.
//!
//! The scanner walks cells of width `grid_step` and discards a cell `[a, b]`
//! when a lower bound on the gap `dist(theta x, Z^N) - L sqrt(log_+(theta/L))`
//! is nonnegative over the whole cell. `theta -> dist(theta x, Z^N)` is
//! 1-Lipschitz for a unit `x`, so on `[a, b]` it is at least
//! `(d(a) + d(b) - (b - a)) / 2`; the right-hand side is increasing, so it is
//! at most its value at `b`. Cells that survive are bisected left-first until
//! the first one of width `<= bisect_tol` whose right end satisfies the strict
//! inequality. Everything left of that cell has been discarded, so the infimum
//! lies in it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UnitVector;

/// Upper limit on the default search horizon.
pub const MAX_DEFAULT_HORIZON: f64 = 1e5;

// Absorbs rounding in the cell lower bound.
const CELL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcdParams {
    #[serde(rename = "L")]
    pub l: f64,
    /// Search horizon; `None` uses [`LcdParams::default_horizon`].
    pub theta_max: Option<f64>,
    pub grid_step: f64,
    pub bisect_tol: f64,
}

impl LcdParams {
    pub fn new(l: f64) -> Self {
        Self { l, theta_max: None, grid_step: 1e-2, bisect_tol: 1e-7 }
    }

    pub fn with_horizon(mut self, theta_max: f64) -> Self {
        self.theta_max = Some(theta_max);
        self
    }

    pub fn with_resolution(mut self, grid_step: f64, bisect_tol: f64) -> Self {
        self.grid_step = grid_step;
        self.bisect_tol = bisect_tol;
        self
    }

    /// `10 exp(m / (12 L^2))`: a generic unit vector in dimension `m` sits at
    /// lattice distance about `sqrt(m/12)`, so crossings are expected well
    /// below this. Capped at [`MAX_DEFAULT_HORIZON`].
    pub fn default_horizon(&self, dim: usize) -> f64 {
        (10.0 * (dim as f64 / (12.0 * self.l * self.l)).exp()).min(MAX_DEFAULT_HORIZON)
    }

    pub fn horizon(&self, dim: usize) -> f64 {
        self.theta_max.unwrap_or_else(|| self.default_horizon(dim))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.l >= 1.0 && self.l.is_finite()) {
            return Err(Error::Parameter(format!("L must be >= 1, got {}", self.l)));
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol < self.grid_step) {
            return Err(Error::Parameter("need 0 < bisect_tol < grid_step".into()));
        }
        if !(self.grid_step < self.horizon(dim)) {
            return Err(Error::Parameter("need grid_step < theta_max".into()));
        }
        Ok(())
    }
}

impl Default for LcdParams {
    fn default() -> Self {
        Self::new(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketStatus {
    Found,
    ExceededHorizon,
}

/// Interval certified to contain the LCD. For `ExceededHorizon`, `lo` is the
/// horizon and `hi` is infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcdBracket {
    pub lo: f64,
    pub hi: f64,
    pub status: BracketStatus,
}

impl LcdBracket {
    pub fn found(lo: f64, hi: f64) -> Self {
        Self { lo, hi, status: BracketStatus::Found }
    }

    pub fn exceeded(horizon: f64) -> Self {
        Self { lo: horizon, hi: f64::INFINITY, status: BracketStatus::ExceededHorizon }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint for found brackets, `lo` otherwise.
    pub fn estimate(&self) -> f64 {
        match self.status {
            BracketStatus::Found => 0.5 * (self.lo + self.hi),
            BracketStatus::ExceededHorizon => self.lo,
        }
    }

    /// Total order used for medians: found brackets by `lo`, then exhausted ones.
    pub fn order_key(&self) -> (BracketStatus, f64) {
        (self.status, self.lo)
    }
}

/// `sqrt(sum_i dist(theta x_i, Z)^2)`, rounding half to even.
pub fn lattice_distance(x: &[f64], theta: f64) -> f64 {
    x.iter()
        .map(|&xi| {
            let y = theta * xi;
            let r = y - y.round_ties_even();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// `L sqrt(log_+(theta / L))`.
pub fn lcd_rhs(l: f64, theta: f64) -> f64 {
    if theta <= l {
        0.0
    } else {
        l * (theta / l).ln().sqrt()
    }
}

struct Scanner<'a> {
    x: &'a [f64],
    l: f64,
    tol: f64,
    floor: f64,
}

impl Scanner<'_> {
    fn dist(&self, theta: f64) -> f64 {
        lattice_distance(self.x, theta)
    }

    fn gap(&self, theta: f64) -> f64 {
        self.dist(theta) - lcd_rhs(self.l, theta)
    }

    fn excluded(&self, a: f64, b: f64, da: f64, db: f64) -> bool {
        0.5 * (da + db - (b - a)) - lcd_rhs(self.l, b) - CELL_SLACK >= 0.0
    }

    // Leftmost certified cell in [a, b], or None if the whole cell is discarded.
    fn search(&self, a: f64, b: f64, da: f64, db: f64) -> Option<(f64, f64)> {
        if self.excluded(a, b, da, db) {
            return None;
        }
        let w = b - a;
        if w <= self.tol && db - lcd_rhs(self.l, b) < 0.0 {
            return Some((a, b));
        }
        if w <= self.floor {
            // a touching point the scanner cannot resolve further
            return None;
        }
        let m = 0.5 * (a + b);
        let dm = self.dist(m);
        self.search(a, m, da, dm).or_else(|| self.search(m, b, dm, db))
    }
}

/// Certified bracket around `D_L(x)`.
pub fn lcd(x: &UnitVector, params: &LcdParams) -> Result<LcdBracket> {
    params.validate(x.dim())?;
    Ok(lcd_unchecked(x.coords(), params))
}

pub(crate) fn lcd_unchecked(x: &[f64], params: &LcdParams) -> LcdBracket {
    let sup = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let horizon = params.horizon(x.len());
    // below both L and 1/(2|x|_inf) the gap is strictly positive
    let start = params.l.max(0.5 / sup);
    let scanner = Scanner { x, l: params.l, tol: params.bisect_tol, floor: params.bisect_tol * 1e-3 };
    let mut a = start;
    let mut da = scanner.dist(a);
    while a < horizon {
        let b = (a + params.grid_step).min(horizon);
        let db = scanner.dist(b);
        if let Some((lo, hi)) = scanner.search(a, b, da, db) {
            debug_assert!(scanner.gap(hi) < 0.0);
            return LcdBracket::found(lo, hi);
        }
        a = b;
        da = db;
    }
    LcdBracket::exceeded(horizon)
}
