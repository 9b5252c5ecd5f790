//! Admissible product sets of integer intervals.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First clause an admissibility check failed on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "kebab-case")]
pub enum AdmissibilityViolation {
    /// `A_i` is not origin-symmetric or leaves `(-nN, nN)`.
    SymmetryOrRange { set: usize },
    /// `A_i` for `i > delta n` is not an integer interval of size `>= 2N+1`.
    Interval { set: usize, size: usize },
    /// `A_i` for `i <= delta n` is not two intervals of total size `>= 2N`
    /// avoiding `[-N, N]`.
    TwoIntervals { set: usize },
    /// `sum_i ln |A_i| > n ln(K N)`.
    Cardinality { log_product: f64, log_bound: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub violation: Option<AdmissibilityViolation>,
}

// Maximal runs of consecutive integers.
fn runs(set: &BTreeSet<i64>) -> Vec<(i64, i64)> {
    let mut out: Vec<(i64, i64)> = Vec::new();
    for &x in set {
        match out.last_mut() {
            Some((_, hi)) if *hi + 1 == x => *hi = x,
            _ => out.push((x, x)),
        }
    }
    out
}

/// Checks the four admissibility clauses in order; sets are numbered from 1
/// in the report and `i <= delta n` selects the two-interval clause.
pub fn is_admissible(sets: &[BTreeSet<i64>], big_n: i64, k: f64, delta: f64) -> Result<AdmissibilityReport> {
    let n = sets.len();
    if n == 0 {
        return Err(Error::Parameter("need at least one set".into()));
    }
    if big_n < 1 {
        return Err(Error::Parameter(format!("N must be >= 1, got {big_n}")));
    }
    if !(k > 0.0) || !(0.0..=1.0).contains(&delta) {
        return Err(Error::Parameter(format!("need K > 0 and delta in [0,1], got K = {k}, delta = {delta}")));
    }
    let fail = |v| Ok(AdmissibilityReport { admissible: false, violation: Some(v) });
    let range = n as i64 * big_n;
    for (idx, a) in sets.iter().enumerate() {
        let symmetric = a.iter().all(|&x| a.contains(&-x));
        let in_range = a.iter().all(|&x| x.abs() < range);
        if !symmetric || !in_range {
            return fail(AdmissibilityViolation::SymmetryOrRange { set: idx + 1 });
        }
    }
    let cutoff = delta * n as f64;
    for (idx, a) in sets.iter().enumerate() {
        let i = idx + 1;
        let r = runs(a);
        if i as f64 > cutoff {
            if r.len() != 1 || (a.len() as i64) < 2 * big_n + 1 {
                return fail(AdmissibilityViolation::Interval { set: i, size: a.len() });
            }
        } else {
            let avoids = a.iter().all(|&x| x.abs() > big_n);
            if r.len() > 2 || !avoids || (a.len() as i64) < 2 * big_n {
                return fail(AdmissibilityViolation::TwoIntervals { set: i });
            }
        }
    }
    let log_product: f64 = sets.iter().map(|a| (a.len() as f64).ln()).sum();
    let log_bound = n as f64 * (k * big_n as f64).ln();
    if log_product > log_bound {
        return fail(AdmissibilityViolation::Cardinality { log_product, log_bound });
    }
    Ok(AdmissibilityReport { admissible: true, violation: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(a: i64, b: i64) -> BTreeSet<i64> {
        (a..=b).collect()
    }

    #[test]
    fn centered_intervals_are_admissible() {
        for big_n in 1..6 {
            let sets = vec![interval(-big_n, big_n); 5];
            let r = is_admissible(&sets, big_n, 3.0, 0.0).unwrap();
            assert!(r.admissible, "{r:?}");
        }
    }

    #[test]
    fn singleton_fails_interval_clause() {
        let mut sets = vec![interval(-2, 2); 3];
        sets[0] = BTreeSet::from([0]);
        let r = is_admissible(&sets, 2, 3.0, 0.0).unwrap();
        assert_eq!(r.violation, Some(AdmissibilityViolation::Interval { set: 1, size: 1 }));
    }

    #[test]
    fn two_interval_clause() {
        let big_n = 3;
        let mut first: BTreeSet<i64> = interval(-2 * big_n, -big_n - 1);
        first.extend(interval(big_n + 1, 2 * big_n));
        let mut sets = vec![interval(-big_n, big_n); 3];
        sets[0] = first.clone();
        let r = is_admissible(&sets, big_n, 3.0, 1.0 / 3.0).unwrap();
        assert!(r.admissible, "{r:?}");
        // touching [-N, N] breaks it
        first.insert(big_n);
        first.insert(-big_n);
        sets[0] = first;
        let r = is_admissible(&sets, big_n, 3.0, 1.0 / 3.0).unwrap();
        assert_eq!(r.violation, Some(AdmissibilityViolation::TwoIntervals { set: 1 }));
    }

    #[test]
    fn symmetry_range_and_product() {
        let sets = vec![interval(-1, 2), interval(-1, 1)];
        let r = is_admissible(&sets, 1, 3.0, 0.0).unwrap();
        assert_eq!(r.violation, Some(AdmissibilityViolation::SymmetryOrRange { set: 1 }));
        let sets = vec![interval(-2, 2), interval(-1, 1)];
        let r = is_admissible(&sets, 1, 3.0, 0.0).unwrap();
        assert_eq!(r.violation, Some(AdmissibilityViolation::SymmetryOrRange { set: 1 }));
        let sets = vec![interval(-3, 3); 2];
        let r = is_admissible(&sets, 2, 3.0, 0.0).unwrap();
        assert!(matches!(r.violation, Some(AdmissibilityViolation::Cardinality { .. })));
        assert!(is_admissible(&sets, 2, 3.5, 0.0).unwrap().admissible);
    }

    #[test]
    fn parameter_errors() {
        assert!(is_admissible(&[], 1, 3.0, 0.0).is_err());
        assert!(is_admissible(&[interval(-1, 1)], 0, 3.0, 0.0).is_err());
        assert!(is_admissible(&[interval(-1, 1)], 1, 3.0, 1.5).is_err());
    }
}
