//! Median regularized LCD over the spread blocks of a vector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lcd::{lcd_unchecked, BracketStatus, LcdBracket, LcdParams};
use crate::error::{Error, Result};
use crate::geometry::{spread_assignment, SphereParams, UnitVector};

/// Upper-median split of `m` ranked items.
///
/// `order[k]` is the block at ascending rank `k`; the median sits at rank
/// `floor(m/2)`. `upper` holds the blocks ranked at or above it, `lower` the
/// ones at or below it, both in ascending block order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedianSplit {
    pub order: Vec<usize>,
    pub median: usize,
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
}

pub(crate) fn median_split<K: PartialOrd>(keys: &[K]) -> MedianSplit {
    assert!(!keys.is_empty());
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).expect("comparable keys").then(a.cmp(&b)));
    let pos = keys.len() / 2;
    let mut upper = order[pos..].to_vec();
    let mut lower = order[..=pos].to_vec();
    upper.sort_unstable();
    lower.sort_unstable();
    MedianSplit { median: order[pos], order, upper, lower }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLcd {
    pub block: Vec<usize>,
    pub bracket: LcdBracket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrlcdReport {
    pub median_value: LcdBracket,
    pub per_block: Vec<BlockLcd>,
    /// Block numbers ranked at or above the median.
    pub upper_half: Vec<usize>,
    /// Block numbers ranked at or below the median.
    pub lower_half: Vec<usize>,
    /// Block number attaining the median.
    pub median_block: usize,
}

impl MrlcdReport {
    /// Coordinates of the median block.
    pub fn median_indices(&self) -> &[usize] {
        &self.per_block[self.median_block].block
    }

    /// Union of the coordinates of the upper-half blocks, ascending.
    pub fn upper_indices(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.upper_half.iter().flat_map(|&b| self.per_block[b].block.iter().copied()).collect();
        out.sort_unstable();
        out
    }
}

/// LCD of every normalized block restriction and their upper median.
///
/// Blocks are ranked by `(status, lo, block number)`, so exhausted horizons
/// rank above every found bracket and ties go to the lower block number.
pub fn mrlcd(v: &UnitVector, params: &LcdParams, sphere: &SphereParams, lambda: f64) -> Result<MrlcdReport> {
    let assignment = spread_assignment(v, sphere, lambda)?;
    params.validate(assignment.block_size)?;
    let restricted: Vec<UnitVector> = assignment
        .blocks
        .iter()
        .map(|b| v.restrict_normalized(b))
        .collect::<Result<_>>()?;
    let brackets: Vec<LcdBracket> = restricted.par_iter().map(|u| lcd_unchecked(u.coords(), params)).collect();
    Ok(assemble(assignment.blocks, brackets))
}

pub(crate) fn assemble(blocks: Vec<Vec<usize>>, brackets: Vec<LcdBracket>) -> MrlcdReport {
    let keys: Vec<(BracketStatus, f64)> = brackets.iter().map(LcdBracket::order_key).collect();
    let split = median_split(&keys);
    let per_block: Vec<BlockLcd> =
        blocks.into_iter().zip(brackets).map(|(block, bracket)| BlockLcd { block, bracket }).collect();
    MrlcdReport {
        median_value: per_block[split.median].bracket,
        per_block,
        upper_half: split.upper,
        lower_half: split.lower,
        median_block: split.median,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Inside,
    Outside,
    Indeterminate,
}

/// Whether `bracket` certifies a value in `[d, 2d]`.
pub fn bracket_membership(bracket: &LcdBracket, d: f64) -> Membership {
    let (lo, hi) = (d, 2.0 * d);
    if bracket.lo >= lo && bracket.hi <= hi {
        Membership::Inside
    } else if bracket.hi < lo || bracket.lo > hi {
        Membership::Outside
    } else {
        Membership::Indeterminate
    }
}

/// Level-set membership of the MRLCD of `v` in `[D, 2D]`.
pub fn level_set_member(
    v: &UnitVector,
    d: f64,
    params: &LcdParams,
    sphere: &SphereParams,
    lambda: f64,
) -> Result<Membership> {
    if !(d >= 1.0) {
        return Err(Error::Parameter(format!("level D must be >= 1, got {d}")));
    }
    let report = mrlcd(v, params, sphere, lambda)?;
    Ok(bracket_membership(&report.median_value, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::lcd::lcd;
    use proptest::prelude::*;
    use rand::Rng;

    fn spread_params() -> SphereParams {
        SphereParams::new(0.5, 0.5, 0.19).unwrap()
    }

    #[test]
    fn median_split_conventions() {
        let s = median_split(&[3.0, 1.0, 4.0, 2.0]);
        assert_eq!(s.order, vec![1, 3, 0, 2]);
        assert_eq!(s.median, 0);
        assert_eq!(s.upper, vec![0, 2]);
        assert_eq!(s.lower, vec![0, 1, 3]);
        let s = median_split(&[5.0]);
        assert_eq!((s.median, s.upper.clone(), s.lower.clone()), (0, vec![0], vec![0]));
        let s = median_split(&[2.0, 2.0, 2.0]);
        assert_eq!(s.median, 1);
        for m in 1usize..12 {
            let keys: Vec<f64> = (0..m).map(|k| k as f64).collect();
            assert!(median_split(&keys).upper.len() >= m.div_ceil(2));
        }
    }

    #[test]
    fn exhausted_blocks_rank_high() {
        let brackets = vec![LcdBracket::exceeded(10.0), LcdBracket::found(50.0, 50.0), LcdBracket::found(2.0, 2.0)];
        let r = assemble(vec![vec![0], vec![1], vec![2]], brackets);
        assert_eq!(r.median_block, 1);
        assert_eq!(r.upper_half, vec![0, 1]);
    }

    #[test]
    fn flat_vector_has_identical_blocks() {
        let n = 64;
        let v = UnitVector::normalize(&vec![1.0; n]).unwrap();
        let r = mrlcd(&v, &LcdParams::new(1.0), &spread_params(), 1.0 / 32.0).unwrap();
        assert!(r.per_block.len() > 1);
        for b in &r.per_block {
            assert_eq!(b.bracket, r.median_value);
        }
        let single = lcd(&v.restrict_normalized(&r.per_block[0].block).unwrap(), &LcdParams::new(1.0)).unwrap();
        assert_eq!(single, r.median_value);
    }

    #[test]
    fn single_block() {
        let n = 64;
        let mut rng = crate::rng::rng_from_seed(2);
        let v: Vec<f64> = (0..n).map(|_| 1.0 + 0.1 * rng.gen::<f64>()).collect();
        let v = UnitVector::normalize(&v).unwrap();
        let r = mrlcd(&v, &LcdParams::new(1.0), &spread_params(), 0.125).unwrap();
        assert_eq!(r.per_block.len(), 1);
        assert_eq!((r.upper_half.clone(), r.lower_half.clone()), (vec![0], vec![0]));
        assert_eq!(r.median_indices(), r.per_block[0].block.as_slice());
    }

    #[test]
    fn two_structured_two_generic_blocks() {
        // four blocks of 8 out of the first 32 spread indices of a length-160 vector
        let n = 160;
        let mut rng = crate::rng::rng_from_seed(5);
        let mut v = vec![1.0; n];
        for x in v.iter_mut().take(32).skip(16) {
            *x = 0.7 + 0.6 * rng.gen::<f64>();
        }
        let v = UnitVector::normalize(&v).unwrap();
        let sphere = SphereParams::new(0.5, 0.5, 0.19).unwrap();
        let params = LcdParams::new(1.0);
        let r = mrlcd(&v, &params, &sphere, 0.05).unwrap();
        assert_eq!(r.per_block.len(), 3);
        let sphere = SphereParams::new(0.5, 0.5, 0.2 - 1e-9).unwrap();
        let lam = 0.05;
        let r = mrlcd(&v, &params, &sphere, lam).unwrap();
        assert_eq!(r.per_block.len(), 4);
        assert_eq!(r.per_block[0].block, (0..8).collect::<Vec<_>>());
        // oracle: per-block LCD by the scanner on each block separately
        let vals: Vec<f64> = r
            .per_block
            .iter()
            .map(|b| lcd(&v.restrict_normalized(&b.block).unwrap(), &params).unwrap().lo)
            .collect();
        assert_eq!(vals[0], vals[1]);
        let generic_min = vals[2].min(vals[3]);
        assert!(generic_min > vals[0]);
        assert_eq!(r.median_value.lo, generic_min);
    }

    #[test]
    fn membership_states() {
        let tol = 1e-7;
        assert_eq!(bracket_membership(&LcdBracket::found(1.5, 1.5 + tol), 1.0), Membership::Inside);
        assert_eq!(bracket_membership(&LcdBracket::found(3.0, 3.0 + tol), 1.0), Membership::Outside);
        assert_eq!(bracket_membership(&LcdBracket::found(2.0 - tol / 2.0, 2.0 + tol / 2.0), 1.0), Membership::Indeterminate);
        assert_eq!(bracket_membership(&LcdBracket::exceeded(5.0), 1.0), Membership::Outside);
        assert_eq!(bracket_membership(&LcdBracket::exceeded(5.0), 4.0), Membership::Indeterminate);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn permutation_keeps_block_values(seed in 0u64..1000) {
            // sorted coordinates: any permutation that keeps the sorted order maps blocks to blocks
            let n = 64;
            let mut rng = crate::rng::rng_from_seed(seed);
            let mut v: Vec<f64> = (0..n).map(|_| 0.8 + 0.4 * rng.gen::<f64>()).collect();
            v.sort_by(f64::total_cmp);
            let u = UnitVector::normalize(&v).unwrap();
            let mut rev = v.clone();
            rev.reverse();
            let w = UnitVector::normalize(&rev).unwrap();
            let params = LcdParams::new(1.0);
            let sphere = SphereParams::new(0.5, 0.5, 0.19).unwrap();
            let a = mrlcd(&u, &params, &sphere, 1.0 / 16.0).unwrap();
            let b = mrlcd(&w, &params, &sphere, 1.0 / 16.0).unwrap();
            let mut ka: Vec<Vec<u64>> = a.per_block.iter().map(|p| {
                let mut c: Vec<u64> = p.block.iter().map(|&i| v[i].to_bits()).collect(); c.sort_unstable(); c
            }).collect();
            let mut kb: Vec<Vec<u64>> = b.per_block.iter().map(|p| {
                let mut c: Vec<u64> = p.block.iter().map(|&i| rev[i].to_bits()).collect(); c.sort_unstable(); c
            }).collect();
            ka.sort(); kb.sort();
            if ka == kb {
                let mut la: Vec<f64> = a.per_block.iter().map(|p| p.bracket.lo).collect();
                let mut lb: Vec<f64> = b.per_block.iter().map(|p| p.bracket.lo).collect();
                la.sort_by(f64::total_cmp); lb.sort_by(f64::total_cmp);
                for (x, y) in la.iter().zip(&lb) {
                    prop_assert!((x - y).abs() <= 1e-7);
                }
            }
            for b in &a.upper_half {
                prop_assert!(a.per_block[*b].bracket.lo >= a.median_value.lo - params.bisect_tol);
            }
        }
    }
}
