//! Randomized rounding to integer vectors with per-instance certification.
//!
//! Each attempt rounds `y_i` up with probability `frac(y_i)` and down
//! otherwise, so `|y_i - y'_i| < 1` always. An attempt is accepted when
//! - (R1) `max_i |y_i - y'_i| <= 1`,
//! - (R2) the small-ball function of `sum_i b_i y'_i` stays below
//!   `C_cert mu t` for every `t >= sqrt(n)`,
//! - (R3) `L(sum_i b_i y'_i, sqrt(n)) >= c_cert L(sum_i b_i y_i, sqrt(n))`.
//!
//! Both (R2) checks are exact over the whole half-line `t >= sqrt(n)`: the
//! small-ball function is a right-continuous step function, so its ratio to
//! `t` peaks at `sqrt(n)` or at one of its jumps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anticonc::atoms::{weighted_sum_atoms, AtomDistribution};
use crate::anticonc::levy::levy;
use crate::ensembles::EntryLaw;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertConstants {
    /// Upper constant in (R2).
    pub c_upper: f64,
    /// Lower constant in (R3).
    pub c_lower: f64,
}

impl Default for CertConstants {
    fn default() -> Self {
        Self { c_upper: 8.0, c_lower: 0.125 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingChecks {
    /// `max_i |y_i - y'_i|`.
    pub r1: f64,
    /// `sup_{t >= sqrt(n)} Q(t) / (mu t)` for the post-rounding small-ball function `Q`.
    pub r2: f64,
    /// Width attaining `r2`.
    pub r2_at: f64,
    /// `L(S', sqrt(n)) / L(S, sqrt(n))`.
    pub r3: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingResult {
    pub y_prime: Vec<i64>,
    pub attempts: usize,
    pub checks: RoundingChecks,
    pub constants_used: CertConstants,
    pub mu: f64,
    /// Largest (R1) value over every attempt made, accepted or not.
    pub worst_r1: f64,
}

fn validate(y: &[f64], mu: f64, constants: &CertConstants) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Parameter("empty vector".into()));
    }
    if y.iter().any(|v| !v.is_finite() || v.abs() > 2f64.powi(52)) {
        return Err(Error::Numeric("coordinates must be finite and below 2^52".into()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Parameter(format!("mu must be positive, got {mu}")));
    }
    if !(constants.c_upper > 0.0 && constants.c_lower > 0.0) {
        return Err(Error::Parameter("certification constants must be positive".into()));
    }
    Ok(())
}

/// One rounding draw. Every coordinate consumes exactly one uniform, so the
/// stream of candidates does not depend on the certification outcome.
pub fn round_once<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Vec<i64> {
    y.iter()
        .map(|&v| {
            let fl = v.floor();
            let u: f64 = rng.gen();
            (fl + if u < v - fl { 1.0 } else { 0.0 }) as i64
        })
        .collect()
}

fn r1(y: &[f64], y_prime: &[i64]) -> f64 {
    y.iter().zip(y_prime).map(|(a, &b)| (a - b as f64).abs()).fold(0.0, f64::max)
}

/// `sup_{t >= t0} P[|S - psi| <= t] / t` with its maximizer.
pub fn centered_ratio(d: &AtomDistribution, psi: f64, t0: f64) -> (f64, f64) {
    let mut dist: Vec<(f64, f64)> = d.atoms().iter().map(|a| ((a.value - psi).abs(), a.prob)).collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut mass = 0.0;
    let mut k = 0;
    while k < dist.len() && dist[k].0 <= t0 {
        mass += dist[k].1;
        k += 1;
    }
    let mut best = (mass / t0, t0);
    while k < dist.len() {
        let t = dist[k].0;
        while k < dist.len() && dist[k].0 == t {
            mass += dist[k].1;
            k += 1;
        }
        if mass / t > best.0 {
            best = (mass / t, t);
        }
    }
    best
}

/// `sup_{t >= t0} L(S, t) / t` for an integer-valued `S`, with its maximizer.
///
/// A closed window of width `2t` holds at most `floor(2t) + 1` consecutive
/// integers, so on `[k/2, (k+1)/2)` the concentration is the largest mass of
/// `k + 1` consecutive integers.
pub fn integer_levy_ratio(d: &AtomDistribution, t0: f64) -> (f64, f64) {
    let ints: Vec<(i64, f64)> = d.atoms().iter().map(|a| (a.value.round() as i64, a.prob)).collect();
    let lo = ints.first().map_or(0, |a| a.0);
    let hi = ints.last().map_or(0, |a| a.0);
    let span = (hi - lo) as usize;
    let mut cum = vec![0.0; span + 2];
    for &(v, p) in &ints {
        cum[(v - lo) as usize + 1] += p;
    }
    for i in 1..cum.len() {
        cum[i] += cum[i - 1];
    }
    let window = |k: usize| -> f64 {
        if k >= span {
            return cum[span + 1];
        }
        (0..=span - k).map(|i| cum[i + k + 1] - cum[i]).fold(0.0, f64::max)
    };
    let mut best = (0.0f64, t0);
    let mut k = (2.0 * t0).floor() as usize;
    loop {
        let t = t0.max(0.5 * k as f64);
        let g = window(k);
        if g / t > best.0 {
            best = (g / t, t);
        }
        // g <= 1 beyond here, so later pieces cannot beat best
        if k >= span || 2.0 / (k + 1) as f64 <= best.0 {
            break;
        }
        k += 1;
    }
    best
}

/// Certification checks for one input vector; candidates come from [`round_once`].
#[derive(Clone, Debug)]
pub struct Certifier {
    y: Vec<f64>,
    law: EntryLaw,
    psi: Option<f64>,
    mu: f64,
    sqrt_n: f64,
    before: f64,
    constants: CertConstants,
}

impl Certifier {
    /// Checks against the `psi`-centered small-ball bound.
    pub fn centered(y: &[f64], law: &EntryLaw, psi: f64, mu: f64, constants: CertConstants) -> Result<Self> {
        validate(y, mu, &constants)?;
        law.validate()?;
        if !law.supported_in_unit_interval() || law.atoms().is_none() {
            return Err(Error::Parameter(format!("law {law} must be atomic and supported in [-1, 1]")));
        }
        if !psi.is_finite() {
            return Err(Error::Parameter("psi must be finite".into()));
        }
        Self::build(y, *law, Some(psi), mu, constants)
    }

    /// Checks against the Lévy-concentration bound for signed-Bernoulli coefficients.
    pub fn levy(y: &[f64], p: f64, mu: f64, constants: CertConstants) -> Result<Self> {
        validate(y, mu, &constants)?;
        let law = EntryLaw::SignedBernoulli { p };
        law.validate()?;
        Self::build(y, law, None, mu, constants)
    }

    fn build(y: &[f64], law: EntryLaw, psi: Option<f64>, mu: f64, constants: CertConstants) -> Result<Self> {
        let sqrt_n = (y.len() as f64).sqrt();
        let before = levy(&weighted_sum_atoms(y, &law)?, sqrt_n);
        Ok(Self { y: y.to_vec(), law, psi, mu, sqrt_n, before, constants })
    }

    pub fn check(&self, y_prime: &[i64]) -> Result<RoundingChecks> {
        let w: Vec<f64> = y_prime.iter().map(|&v| v as f64).collect();
        let d = weighted_sum_atoms(&w, &self.law)?;
        let (ratio, at) = match self.psi {
            Some(psi) => centered_ratio(&d, psi, self.sqrt_n),
            None => integer_levy_ratio(&d, self.sqrt_n),
        };
        let r1 = r1(&self.y, y_prime);
        let r2 = ratio / self.mu;
        let r3 = levy(&d, self.sqrt_n) / self.before;
        let passed = r1 <= 1.0 && r2 <= self.constants.c_upper && r3 >= self.constants.c_lower;
        Ok(RoundingChecks { r1, r2, r2_at: at, r3, passed })
    }

    /// Draws candidates from the stream seeded by `seed` until one passes.
    pub fn run(&self, max_attempts: usize, seed: u64) -> Result<RoundingResult> {
        if max_attempts == 0 {
            return Err(Error::Parameter("max_attempts must be >= 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let mut best: Option<RoundingResult> = None;
        let mut worst_r1 = 0.0f64;
        for attempt in 1..=max_attempts {
            let y_prime = round_once(&self.y, &mut rng);
            let checks = self.check(&y_prime)?;
            worst_r1 = worst_r1.max(checks.r1);
            let result =
                RoundingResult { y_prime, attempts: attempt, checks, constants_used: self.constants, mu: self.mu, worst_r1 };
            if checks.passed {
                return Ok(result);
            }
            if best.as_ref().is_none_or(|b| margin(&checks, &self.constants) > margin(&b.checks, &self.constants)) {
                best = Some(result);
            }
        }
        let mut best = best.expect("at least one attempt");
        best.worst_r1 = worst_r1;
        Err(Error::Certification {
            attempts: max_attempts,
            detail: format!("best attempt has r2 = {:.4}, r3 = {:.4}", best.checks.r2, best.checks.r3),
            best: Box::new(best),
        })
    }
}

// Closest attempt to passing: the smaller of the two slack factors.
fn margin(c: &RoundingChecks, k: &CertConstants) -> f64 {
    (k.c_upper / c.r2).min(c.r3 / k.c_lower)
}

/// Rounding certified against the `psi`-centered small-ball bound.
pub fn randomized_round(
    y: &[f64],
    law: &EntryLaw,
    psi: f64,
    mu: f64,
    constants: CertConstants,
    max_attempts: usize,
    seed: u64,
) -> Result<RoundingResult> {
    Certifier::centered(y, law, psi, mu, constants)?.run(max_attempts, seed)
}

/// Rounding certified against the Lévy-concentration bound for
/// signed-Bernoulli coefficients.
pub fn levy_round(
    y: &[f64],
    p: f64,
    mu: f64,
    constants: CertConstants,
    max_attempts: usize,
    seed: u64,
) -> Result<RoundingResult> {
    Certifier::levy(y, p, mu, constants)?.run(max_attempts, seed)
}

/// Smallest `mu` with `P[|sum_i b_i y_i - psi| <= t] <= mu t` for all `t >= sqrt(n)`.
pub fn centered_mu(y: &[f64], law: &EntryLaw, psi: f64) -> Result<f64> {
    let d = weighted_sum_atoms(y, law)?;
    Ok(centered_ratio(&d, psi, (y.len() as f64).sqrt()).0)
}

/// A `mu` with `L(sum_i b'_i y_i, t) <= mu t` for all `t >= sqrt(n)`.
///
/// On a geometric grid `t_0 = sqrt(n) < t_1 < ...` with ratio `growth`, the
/// concentration on `[t_k, t_{k+1}]` is at most its value at `t_{k+1}` and `t`
/// is at least `t_k`; the grid runs until the window covers the support.
pub fn levy_mu(y: &[f64], p: f64, growth: f64) -> Result<f64> {
    if !(growth > 1.0) {
        return Err(Error::Parameter(format!("grid growth must exceed 1, got {growth}")));
    }
    let d = weighted_sum_atoms(y, &EntryLaw::SignedBernoulli { p })?;
    let t0 = (y.len() as f64).sqrt();
    let cover = 0.5 * d.diameter();
    let mut t = t0;
    let mut mu = levy(&d, t) / t;
    while t < cover {
        let next = t * growth;
        mu = mu.max(levy(&d, next) / t);
        t = next;
    }
    Ok(mu)
}
