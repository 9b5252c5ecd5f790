//! Lévy concentration `sup_x P[|X - x| <= eps]`, exact and sampled.

use serde::{Deserialize, Serialize};

use super::atoms::AtomDistribution;
use crate::ensembles::EntryLaw;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Confidence level of every reported Hoeffding radius.
pub const HOEFFDING_CONFIDENCE: f64 = 0.99;

/// Two-sided Hoeffding radius at 99% confidence: `sqrt(ln(2/0.01) / (2 trials))`.
pub fn hoeffding_radius(trials: usize) -> f64 {
    ((2.0 / (1.0 - HOEFFDING_CONFIDENCE)).ln() / (2.0 * trials as f64)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcentrationMethod {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub value: f64,
    pub method: ConcentrationMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hoeffding_radius: Option<f64>,
}

/// Largest mass in a closed window of width `2 eps` over sorted points with
/// prefix masses `cum` (`cum[0] = 0`).
fn sliding_window_max(values: &[f64], cum: &[f64], eps: f64) -> f64 {
    let width = 2.0 * eps;
    let mut best = 0.0f64;
    let mut j = 0;
    for i in 0..values.len() {
        if j < i {
            j = i;
        }
        while j < values.len() && values[j] - values[i] <= width {
            j += 1;
        }
        best = best.max(cum[j] - cum[i]);
    }
    best.min(1.0)
}

/// Exact Lévy concentration of an atomic law. The supremum over centers is
/// attained with the window's left edge on an atom.
pub fn levy(d: &AtomDistribution, eps: f64) -> f64 {
    let values: Vec<f64> = d.atoms().iter().map(|a| a.value).collect();
    let mut cum = Vec::with_capacity(values.len() + 1);
    cum.push(0.0);
    let mut s = 0.0;
    for a in d.atoms() {
        s += a.prob;
        cum.push(s);
    }
    sliding_window_max(&values, &cum, eps)
}

pub fn levy_exact(d: &AtomDistribution, eps: f64) -> Result<ConcentrationEstimate> {
    if !(eps >= 0.0) {
        return Err(Error::Parameter(format!("window radius must be >= 0, got {eps}")));
    }
    Ok(ConcentrationEstimate { value: levy(d, eps), method: ConcentrationMethod::Exact, trials: None, hoeffding_radius: None })
}

/// Monte Carlo Lévy concentration of `sum_i w_i b_i`.
///
/// Returns the exact supremum of the empirical measure: every sampled value is
/// tried as a window's left edge.
pub fn levy_mc(weights: &[f64], law: &EntryLaw, eps: f64, trials: usize, seed: u64) -> Result<ConcentrationEstimate> {
    law.validate()?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Parameter(format!("window radius must be >= 0, got {eps}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut sums: Vec<f64> = (0..trials)
        .map(|_| weights.iter().map(|w| w * law.sample(&mut rng)).sum())
        .collect();
    sums.sort_by(f64::total_cmp);
    let step = 1.0 / trials as f64;
    let cum: Vec<f64> = (0..=trials).map(|k| k as f64 * step).collect();
    Ok(ConcentrationEstimate {
        value: sliding_window_max(&sums, &cum, eps),
        method: ConcentrationMethod::MonteCarlo,
        trials: Some(trials),
        hoeffding_radius: Some(hoeffding_radius(trials)),
    })
}
