//! Evaluators for the anticoncentration inequalities.

use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use crate::ensembles::EntryLaw;
use crate::error::{Error, Result};

/// `e^N prod_k (a_k eps + b_k)`.
pub fn tensorization_bound(coeffs: &[(f64, f64)], eps: f64) -> f64 {
    let n = coeffs.len() as f64;
    coeffs.iter().fold(n.exp(), |acc, &(a, b)| acc * (a * eps + b))
}

/// `C r (sum_i r_i^2 (1 - L_i) / L_i^2)^(-1/2)` for components `(r_i, L_i)`.
///
/// Infinite when every `L_i = 1`.
pub fn rogozin_bound(components: &[(f64, f64)], r: f64, constant: f64) -> Result<f64> {
    let mut r_max = 0.0f64;
    let mut sum = 0.0;
    for &(ri, li) in components {
        if !(ri > 0.0) || !(li > 0.0 && li <= 1.0) {
            return Err(Error::Parameter(format!("component needs r_i > 0 and L_i in (0,1], got ({ri}, {li})")));
        }
        r_max = r_max.max(ri);
        sum += ri * ri * (1.0 - li) / (li * li);
    }
    if r < r_max {
        return Err(Error::Precondition(format!("r = {r} is below max r_i = {r_max}")));
    }
    if sum == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(constant * r / sum.sqrt())
}

/// Constants of the MRLCD small-ball bound
/// `C L (eps / sqrt(|J|/n) + sqrt(lambda n / |J|) / D)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrlcdBound {
    pub constant: f64,
    pub l: f64,
    pub lambda: f64,
    pub n: usize,
}

impl MrlcdBound {
    pub fn eval(&self, eps: f64, j_size: usize, mrlcd: f64) -> f64 {
        let frac = j_size as f64 / self.n as f64;
        let structure = if mrlcd.is_infinite() { 0.0 } else { (self.lambda / frac).sqrt() / mrlcd };
        self.constant * self.l * (eps / frac.sqrt() + structure)
    }

    pub fn eval_clamped(&self, eps: f64, j_size: usize, mrlcd: f64) -> f64 {
        self.eval(eps, j_size, mrlcd).clamp(0.0, 1.0)
    }
}

/// Free-function form of [`MrlcdBound::eval`].
#[allow(clippy::too_many_arguments)]
pub fn mrlcd_anticonc_bound(
    eps: f64,
    j_size: usize,
    n: usize,
    lambda: f64,
    l: f64,
    mrlcd: f64,
    constant: f64,
    clamp: bool,
) -> f64 {
    let b = MrlcdBound { constant, l, lambda, n };
    if clamp {
        b.eval_clamped(eps, j_size, mrlcd)
    } else {
        b.eval(eps, j_size, mrlcd)
    }
}

/// Relative tolerance of the Esseen integral.
pub const ESSEEN_REL_TOL: f64 = 1e-8;

/// Esseen upper bound `C int_{-2}^{2} prod_i |phi(theta w_i / radius)| dtheta`
/// on the Lévy concentration of `sum_i w_i b_i` at `radius`.
pub fn esseen_levy_bound(weights: &[f64], law: &EntryLaw, radius: f64, constant: f64) -> Result<f64> {
    law.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive and finite, got {radius}")));
    }
    let scaled: Vec<f64> = weights.iter().map(|w| w / radius).collect();
    let integrand = |theta: f64| scaled.iter().map(|w| law.char_fn_abs(theta * w)).product::<f64>();
    // the integrand is even
    let (half, _) = integrate(integrand, 0.0, 2.0, ESSEEN_REL_TOL, 1e-15, 200_000)?;
    Ok(constant * 2.0 * half)
}
