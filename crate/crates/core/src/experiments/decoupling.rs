//! Exact check of the decoupling inequality for quadratic forms in Rademacher vectors.
//!
//! With `X~ = P_J X + P_{J^c} X'`, expanding both quadratic forms gives
//! `<GX,X> - <GX~,X~> = 2 (<G P_{J^c}(X - X'), P_J X> - v)` for
//! `v = (<G P_{J^c}X', P_{J^c}X'> - <G P_{J^c}X, P_{J^c}X>) / 2`, so the
//! right-hand event is `|Q(X) - Q(X~)| <= 2 eps`. Both sides are counted
//! exactly over all sign vectors.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use super::config::ExperimentConfig;
use super::report::{map_trials, row, ExperimentReport, Row};
use crate::ensembles::is_symmetric;
use crate::error::{Error, Result};

pub const DECOUPLING_MAX_N: usize = 8;

/// Exact counts at one width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecouplingPoint {
    /// Largest number of the `2^n` sign vectors in one window of `<GX,X>`.
    pub lhs_count: u64,
    /// Number of `(X, P_{J^c} X')` pairs, out of `2^{n + |J^c|}`, in the event.
    pub rhs_count: u64,
}

impl DecouplingPoint {
    /// `LHS^2 <= RHS` in integer arithmetic.
    pub fn holds(&self, n: usize, jc: usize) -> bool {
        u128::from(self.lhs_count).pow(2) << jc <= u128::from(self.rhs_count) << n
    }

    pub fn lhs(&self, n: usize) -> f64 {
        self.lhs_count as f64 / (1u64 << n) as f64
    }

    pub fn rhs(&self, n: usize, jc: usize) -> f64 {
        self.rhs_count as f64 / (1u64 << (n + jc)) as f64
    }
}

fn quadratic(g: &DMatrix<f64>, mask: usize) -> f64 {
    let n = g.nrows();
    let x = |i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += g[(i, j)] * x(i) * x(j);
        }
    }
    q
}

/// Exact counts for both sides at every width in `eps_grid`.
pub fn decoupling_sides(g: &DMatrix<f64>, j: &[usize], eps_grid: &[f64]) -> Result<Vec<DecouplingPoint>> {
    let n = g.nrows();
    if !is_symmetric(g) {
        return Err(Error::Precondition("G must be symmetric".into()));
    }
    if n == 0 || n > DECOUPLING_MAX_N {
        return Err(Error::Capacity(format!("exact decoupling supports 1 <= n <= {DECOUPLING_MAX_N}, got {n}")));
    }
    let mut j_mask = 0usize;
    for &i in j {
        if i >= n {
            return Err(Error::Parameter(format!("index {i} outside 0..{n}")));
        }
        j_mask |= 1 << i;
    }
    let full = (1usize << n) - 1;
    let jc_mask = full & !j_mask;
    let q: Vec<f64> = (0..=full).map(|m| quadratic(g, m)).collect();

    let mut sorted = q.clone();
    sorted.sort_by(f64::total_cmp);
    let mut diffs = Vec::with_capacity((full + 1) << jc_mask.count_ones());
    for x in 0..=full {
        // every submask of J^c as the X' part
        let mut sub = jc_mask;
        loop {
            diffs.push((q[x] - q[(x & j_mask) | sub]).abs());
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & jc_mask;
        }
    }
    diffs.sort_by(f64::total_cmp);
    Ok(eps_grid
        .iter()
        .map(|&eps| {
            let mut best = 0;
            let mut hi = 0;
            for lo in 0..sorted.len() {
                hi = hi.max(lo);
                while hi < sorted.len() && sorted[hi] - sorted[lo] <= 2.0 * eps {
                    hi += 1;
                }
                best = best.max(hi - lo);
            }
            let rhs = diffs.partition_point(|&d| d <= 2.0 * eps);
            DecouplingPoint { lhs_count: best as u64, rhs_count: rhs as u64 }
        })
        .collect())
}

/// Default grid: `0, 0.5, ..., 9.5`, which hits every boundary of the integer-valued forms.
pub fn default_decoupling_grid() -> Vec<f64> {
    (0..20).map(|k| 0.5 * k as f64).collect()
}

fn random_symmetric_int<R: Rng + ?Sized>(n: usize, range: i64, rng: &mut R) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-range..=range) as f64;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

// One record per subset with its per-eps results.
type SubsetChecks = (Row, Vec<(DecouplingPoint, bool)>);

/// Seeded family of symmetric integer matrices. Trial `t` has dimension
/// `2 + t mod (n - 1)` when `cfg.subset` is absent and checks one random `J`
/// of every size `1..dim-1`; with `cfg.subset` every trial has dimension `n`
/// and uses that `J`.
pub fn run_decoupling_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.n;
    if !(2..=DECOUPLING_MAX_N).contains(&n) {
        return Err(Error::Capacity(format!("exact decoupling supports 2 <= n <= {DECOUPLING_MAX_N}, got {n}")));
    }
    let start = Instant::now();
    let grid = cfg.eps_or(default_decoupling_grid);
    let per_trial = map_trials(cfg, |t, rng| -> Result<Vec<SubsetChecks>> {
        let dim = if cfg.subset.is_some() { n } else { 2 + t % (n - 1) };
        let g = random_symmetric_int(dim, cfg.int_range, rng);
        let subsets: Vec<Vec<usize>> = match &cfg.subset {
            Some(s) => vec![s.clone()],
            None => (1..dim).map(|size| sample(rng, dim, size).into_vec()).collect(),
        };
        subsets
            .into_iter()
            .map(|j| {
                let jc = dim - j.len();
                let pts = decoupling_sides(&g, &j, &grid)?;
                let checked: Vec<(DecouplingPoint, bool)> = pts.iter().map(|p| (*p, p.holds(dim, jc))).collect();
                let min_margin =
                    pts.iter().map(|p| p.rhs(dim, jc) - p.lhs(dim).powi(2)).fold(f64::INFINITY, f64::min);
                let violations = checked.iter().filter(|c| !c.1).count();
                let rec = row([
                    ("trial", t as f64),
                    ("n", dim as f64),
                    ("j_size", j.len() as f64),
                    ("min_margin", min_margin),
                    ("violations", violations as f64),
                ]);
                Ok((rec, checked))
            })
            .collect()
    });
    let mut report = ExperimentReport::new("decouple", cfg);
    let mut worst = vec![0.0f64; grid.len()];
    let mut per_eps_violations = vec![0u64; grid.len()];
    for trial in per_trial {
        for (rec, checked) in trial? {
            let dim = rec["n"] as usize;
            let jc = dim - rec["j_size"] as usize;
            for (k, (p, ok)) in checked.iter().enumerate() {
                worst[k] = worst[k].max(p.lhs(dim).powi(2) / p.rhs(dim, jc));
                per_eps_violations[k] += u64::from(!ok);
            }
            report.records.push(rec);
        }
    }
    for (k, &eps) in grid.iter().enumerate() {
        report.table.push(row([
            ("eps", eps),
            ("max_lhs_sq_over_rhs", worst[k]),
            ("violations", per_eps_violations[k] as f64),
        ]));
    }
    report.violations = per_eps_violations.iter().sum();
    report.set("checks", (report.records.len() * grid.len()) as f64);
    report.set("max_lhs_sq_over_rhs", worst.iter().cloned().fold(0.0, f64::max));
    Ok(report.finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    // direct double loop over (X, X') with the offset v written out
    fn oracle(g: &DMatrix<f64>, j: &[usize], eps: f64) -> (f64, f64) {
        let n = g.nrows();
        let signs = |m: usize| -> Vec<f64> { (0..n).map(|i| if m >> i & 1 == 1 { 1.0 } else { -1.0 }).collect() };
        let qf = |a: &[f64], b: &[f64]| -> f64 {
            (0..n).map(|i| (0..n).map(|k| g[(i, k)] * a[i] * b[k]).sum::<f64>()).sum()
        };
        let in_j = |i: usize| j.contains(&i);
        let proj = |x: &[f64], keep_j: bool| -> Vec<f64> {
            (0..n).map(|i| if in_j(i) == keep_j { x[i] } else { 0.0 }).collect()
        };
        let vals: Vec<f64> = (0..1 << n).map(|m| qf(&signs(m), &signs(m))).collect();
        let lhs = vals
            .iter()
            .map(|&c| vals.iter().filter(|&&v| v >= c && v <= c + 2.0 * eps).count())
            .max()
            .unwrap() as f64
            / (1 << n) as f64;
        let mut hits = 0usize;
        for a in 0..1 << n {
            for b in 0..1 << n {
                let (x, xp) = (signs(a), signs(b));
                let (bx, bxp) = (proj(&x, false), proj(&xp, false));
                let v = 0.5 * (qf(&bxp, &bxp) - qf(&bx, &bx));
                let diff: Vec<f64> = bx.iter().zip(&bxp).map(|(p, q)| p - q).collect();
                if (qf(&diff, &proj(&x, true)) - v).abs() <= eps {
                    hits += 1;
                }
            }
        }
        (lhs, hits as f64 / (1u64 << (2 * n)) as f64)
    }

    #[test]
    fn zero_matrix_is_tight() {
        let g = DMatrix::zeros(3, 3);
        let p = decoupling_sides(&g, &[0], &[0.0]).unwrap()[0];
        assert_eq!((p.lhs(3), p.rhs(3, 2)), (1.0, 1.0));
        assert!(p.holds(3, 2));
    }

    #[test]
    fn identity_n2_matches_pair_enumeration() {
        let g = DMatrix::identity(2, 2);
        let p = decoupling_sides(&g, &[0], &[0.0]).unwrap()[0];
        // <X,X> = 2 always
        assert_eq!(p.lhs(2), 1.0);
        let (_, rhs) = oracle(&g, &[0], 0.0);
        assert_eq!(p.rhs(2, 1), rhs);
        assert!(p.holds(2, 1));
    }

    #[test]
    fn counts_match_oracle_on_random_matrices() {
        let mut rng = crate::rng::rng_from_seed(8);
        for _ in 0..25 {
            let n = rng.gen_range(2..=4);
            let g = random_symmetric_int(n, 3, &mut rng);
            let size = rng.gen_range(1..n);
            let j = sample(&mut rng, n, size).into_vec();
            for eps in [0.0, 0.5, 1.0, 2.0, 3.5] {
                let p = decoupling_sides(&g, &j, &[eps]).unwrap()[0];
                let jc = n - j.len();
                let (lhs, rhs) = oracle(&g, &j, eps);
                assert_eq!((p.lhs(n), p.rhs(n, jc)), (lhs, rhs));
            }
        }
    }

    #[test]
    fn rejects_nonsymmetric_and_large() {
        let mut g = DMatrix::zeros(2, 2);
        g[(0, 1)] = 1.0;
        assert!(matches!(decoupling_sides(&g, &[0], &[0.0]), Err(Error::Precondition(_))));
        let cfg = ExperimentConfig { n: 9, ..Default::default() };
        assert!(matches!(run_decoupling_check(&cfg), Err(Error::Capacity(_))));
    }

    #[test]
    fn small_family_has_no_violations() {
        let cfg = ExperimentConfig { n: 5, trials: 12, ..Default::default() };
        let r = run_decoupling_check(&cfg).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.table.len(), 20);
    }
}
