//! Threshold `sup { t in (0,1) : L(sum_i b'_i x_i, t) > L t }` for
//! signed-Bernoulli coefficients, and its median over spread blocks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mrlcd::{median_split, MedianSplit};
use crate::anticonc::atoms::{weighted_sum_atoms, AtomDistribution};
use crate::anticonc::levy::levy;
use crate::ensembles::EntryLaw;
use crate::error::{Error, Result};
use crate::geometry::{spread_assignment, SphereParams, UnitVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCertificate {
    pub t_star: f64,
    pub levy_at_t_star: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub value: f64,
    pub p: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub certificate: Option<ThresholdCertificate>,
}

fn check_args(p: f64, l: f64, tol: f64) -> Result<()> {
    EntryLaw::SignedBernoulli { p }.validate()?;
    if !(l >= 1.0 && l.is_finite()) {
        return Err(Error::Parameter(format!("L must be >= 1, got {l}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// Threshold of the unit vector `x`.
pub fn threshold(x: &UnitVector, p: f64, l: f64, tol: f64) -> Result<ThresholdReport> {
    check_args(p, l, tol)?;
    let d = weighted_sum_atoms(x.coords(), &EntryLaw::SignedBernoulli { p })?;
    let mut report = threshold_of_distribution(&d, l, tol);
    report.p = p;
    Ok(report)
}

/// Threshold of an arbitrary atomic law, with `p` left at zero.
///
/// `g(t) = L(d, t)` is at least the mass `M` of any run of atoms spanning
/// `[v_i, v_j]` once `t >= (v_j - v_i)/2`, and equals the largest such mass.
/// So the set `{t : g(t) > L t}` is the union over runs of `[(v_j - v_i)/2,
/// M/L)` and its supremum is the largest `M/L` over runs with
/// `L (v_j - v_i)/2 < M`. For a fixed left end `i` that mass grows with `j`,
/// so only the rightmost feasible `j` matters. Writing the condition as
/// `L v_j/2 - cum[j+1] < L v_i/2 - cum[i]`, the rightmost feasible `j` is a
/// suffix minimum of the left side, found by binary search.
pub fn threshold_of_distribution(d: &AtomDistribution, l: f64, tol: f64) -> ThresholdReport {
    let atoms = d.atoms();
    let n = atoms.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for a in atoms {
        cum.push(cum.last().unwrap() + a.prob);
    }
    let lhs: Vec<f64> = (0..n).map(|j| 0.5 * l * atoms[j].value - cum[j + 1]).collect();
    // strict suffix minima scanned from the right: positions descend, values descend
    let mut records: Vec<usize> = Vec::new();
    for j in (0..n).rev() {
        if records.last().is_none_or(|&r| lhs[j] < lhs[r]) {
            records.push(j);
        }
    }
    let mut best: Option<(f64, f64)> = None; // (mass, half-gap)
    for i in 0..n {
        let rhs = 0.5 * l * atoms[i].value - cum[i];
        // first record (rightmost position) with lhs < rhs
        let k = records.partition_point(|&r| lhs[r] >= rhs);
        let Some(&j) = records.get(k) else { continue };
        let mass = (cum[j + 1] - cum[i]).min(1.0);
        let half_gap = 0.5 * (atoms[j].value - atoms[i].value);
        if !(l * half_gap < mass) || half_gap >= 1.0 {
            continue;
        }
        if best.is_none_or(|(m, _)| mass > m) {
            best = Some((mass, half_gap));
        }
    }
    let Some((mass, half_gap)) = best else {
        return ThresholdReport { value: 0.0, p: 0.0, l, certificate: None };
    };
    let value = (mass / l).min(1.0);
    let mut t_star = half_gap.max(value - 0.5 * tol);
    if t_star <= 0.0 {
        t_star = 0.5 * value;
    }
    let certificate = ThresholdCertificate { t_star, levy_at_t_star: levy(d, t_star) };
    ThresholdReport { value, p: 0.0, l, certificate: Some(certificate) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockThreshold {
    pub block: Vec<usize>,
    pub report: ThresholdReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedianThresholdReport {
    pub median: ThresholdReport,
    pub per_block: Vec<BlockThreshold>,
    pub upper_half: Vec<usize>,
    pub lower_half: Vec<usize>,
    pub median_block: usize,
}

/// Upper median of the thresholds of the normalized spread blocks of `v`,
/// ranked by value then block number.
pub fn median_threshold(
    v: &UnitVector,
    p: f64,
    l: f64,
    sphere: &SphereParams,
    lambda: f64,
    tol: f64,
) -> Result<MedianThresholdReport> {
    check_args(p, l, tol)?;
    let assignment = spread_assignment(v, sphere, lambda)?;
    let reports: Vec<ThresholdReport> = assignment
        .blocks
        .par_iter()
        .map(|b| threshold(&v.restrict_normalized(b)?, p, l, tol))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = reports.iter().map(|r| r.value).collect();
    let MedianSplit { median, upper, lower, .. } = median_split(&values);
    let per_block = assignment
        .blocks
        .into_iter()
        .zip(reports)
        .map(|(block, report)| BlockThreshold { block, report })
        .collect::<Vec<_>>();
    Ok(MedianThresholdReport {
        median: per_block[median].report,
        per_block,
        upper_half: upper,
        lower_half: lower,
        median_block: median,
    })
}


#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use crate::anticonc::atoms::oracle::direct_enumeration;
    use proptest::prelude::*;
    use rand::Rng;

    const TOL: f64 = 1e-9;

    #[test]
    fn basis_vector_anchor() {
        let r = threshold(&UnitVector::new(vec![1.0, 0.0, 0.0]).unwrap(), 0.1, 2.0, TOL).unwrap();
        assert!((r.value - 0.41).abs() < 1e-9, "{r:?}");
        let c = r.certificate.unwrap();
        assert!(c.levy_at_t_star > 2.0 * c.t_star);
        assert!(c.t_star > r.value - TOL && c.t_star < r.value);
    }

    #[test]
    fn diagonal_value_from_enumeration() {
        // atoms of (b1 + b2)/sqrt2: 0 w.p. 0.82^2 + 2 * 0.09^2, +-1/sqrt2 and +-sqrt2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = UnitVector::new(vec![h, h]).unwrap();
        let d = direct_enumeration(x.coords(), &EntryLaw::SignedBernoulli { p: 0.1 });
        let zero = d.atoms().iter().find(|a| a.value.abs() < 1e-12).unwrap().prob;
        assert!((zero - 0.6886).abs() < 1e-12);
        let r = threshold(&x, 0.1, 2.0, TOL).unwrap();
        assert!((r.value - breakpoints(&d, 2.0)).abs() < 1e-12);
        // the run [0, 1/sqrt2] has mass 0.6886 + 0.1476 and half-gap 1/(2 sqrt2) < 0.8362/2
        let run = (0.6886 + 0.1476) / 2.0;
        assert!((r.value - run).abs() < 1e-12, "{}", r.value);
        assert!((r.value - 0.4181).abs() < 1e-12);
    }

    #[test]
    fn isolated_atoms() {
        // a single atom always qualifies for small t, so the set is never empty
        let d = AtomDistribution::from_pairs([(-10.0, 0.5), (10.0, 0.5)]);
        assert_eq!(threshold_of_distribution(&d, 1000.0, TOL).value, 0.0005);
        let d = AtomDistribution::from_pairs((0..100).map(|k| (3.0 * k as f64, 0.01)));
        assert!((threshold_of_distribution(&d, 1000.0, TOL).value - 1e-5).abs() < 1e-18);
        assert_eq!(threshold_of_distribution(&AtomDistribution::default(), 2.0, TOL).value, 0.0);
        let r = threshold_of_distribution(&AtomDistribution::from_pairs((0..4).map(|k| (3.0 * k as f64, 0.25))), 1.0, TOL);
        assert_eq!(r.value, 0.25);
    }

    #[test]
    fn rejects_bad_arguments() {
        let x = UnitVector::new(vec![1.0]).unwrap();
        assert!(threshold(&x, 1.5, 2.0, TOL).is_err());
        assert!(threshold(&x, 0.1, 0.5, TOL).is_err());
        let big = UnitVector::normalize(&[1.0; 17]).unwrap();
        assert!(matches!(threshold(&big, 0.1, 2.0, TOL), Err(Error::Capacity(_))));
    }

    #[test]
    fn agrees_with_dense_grid() {
        let mut rng = crate::rng::rng_from_seed(17);
        for _ in 0..30 {
            let dim = rng.gen_range(1..=8);
            let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            let x = UnitVector::normalize(&v).unwrap();
            let p = rng.gen_range(0.01..0.5);
            let l = rng.gen_range(1.0..4.0);
            let r = threshold(&x, p, l, TOL).unwrap();
            let d = weighted_sum_atoms(x.coords(), &EntryLaw::SignedBernoulli { p }).unwrap();
            let (lower, upper) = dense_grid(&d, l, 10_000);
            assert!(lower <= r.value && r.value <= upper, "[{lower}, {upper}] vs {}", r.value);
        }
    }

    #[test]
    fn median_of_four_distinct_blocks() {
        let n = 160;
        let mut rng = crate::rng::rng_from_seed(23);
        let v: Vec<f64> = (0..n).map(|_| 0.7 + 0.6 * rng.gen::<f64>()).collect();
        let v = UnitVector::normalize(&v).unwrap();
        let sphere = SphereParams::new(0.5, 0.5, 0.2 - 1e-9).unwrap();
        let r = median_threshold(&v, 0.1, 2.0, &sphere, 0.05, TOL).unwrap();
        assert_eq!(r.per_block.len(), 4);
        let mut vals: Vec<f64> = r
            .per_block
            .iter()
            .map(|b| threshold(&v.restrict_normalized(&b.block).unwrap(), 0.1, 2.0, TOL).unwrap().value)
            .collect();
        vals.sort_by(f64::total_cmp);
        assert_eq!(r.median.value, vals[2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_breakpoint_enumeration(v in prop::collection::vec(-1.0f64..1.0, 1..6), p in 0.01f64..0.5, l in 1.0f64..5.0) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
            let x = UnitVector::normalize(&v).unwrap();
            let d = weighted_sum_atoms(x.coords(), &EntryLaw::SignedBernoulli { p }).unwrap();
            let r = threshold(&x, p, l, TOL).unwrap();
            prop_assert!((r.value - breakpoints(&d, l)).abs() < 1e-12);
            prop_assert!(r.value >= 0.0 && r.value < 1.0);
            if let Some(c) = r.certificate {
                prop_assert!(c.levy_at_t_star > l * c.t_star);
                prop_assert!(c.t_star > r.value - TOL && c.t_star < r.value);
            } else {
                prop_assert_eq!(r.value, 0.0);
            }
        }

        #[test]
        fn nonincreasing_in_l(v in prop::collection::vec(-1.0f64..1.0, 1..7), p in 0.01f64..0.5, l1 in 1.0f64..5.0, l2 in 1.0f64..5.0) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
            let x = UnitVector::normalize(&v).unwrap();
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let a = threshold(&x, p, lo, TOL).unwrap().value;
            let b = threshold(&x, p, hi, TOL).unwrap().value;
            prop_assert!(b <= a + 1e-15);
        }
    }
}
