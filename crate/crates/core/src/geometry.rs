//! Compressible/incompressible decomposition of the sphere and spread sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `| |v|_2 - 1 |` accepted by [`UnitVector::new`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A coordinate vector with Euclidean norm 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `coords`, which must already have unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.iter().all(|x| x.is_finite()) {
            return Err(Error::Parameter("unit vector needs finite, nonempty coordinates".into()));
        }
        let norm = l2(&coords);
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Parameter(format!("vector has norm {norm}, not 1")));
        }
        Ok(Self(coords))
    }

    /// Divides by the Euclidean norm.
    pub fn normalize(coords: &[f64]) -> Result<Self> {
        let norm = l2(coords);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Parameter("cannot normalize a zero or non-finite vector".into()));
        }
        Self::new(coords.iter().map(|x| x / norm).collect())
    }

    /// `v_I / |v_I|_2` for an index set `I`.
    pub fn restrict_normalized(&self, indices: &[usize]) -> Result<Self> {
        let sub: Vec<f64> = indices.iter().map(|&i| self.0[i]).collect();
        Self::normalize(&sub)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for UnitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        UnitVector::normalize(&v).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn l2(x: &[f64]) -> f64 {
    // scaled to stay finite for large coordinates
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}

/// Constants of the sphere decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereParams {
    pub c0: f64,
    pub c1: f64,
    /// Fraction of indices placed in `Spread(v)`; must lie in (0, 1/5).
    pub c_spread: f64,
}

impl SphereParams {
    pub fn new(c0: f64, c1: f64, c_spread: f64) -> Result<Self> {
        let p = Self { c0, c1, c_spread };
        p.validate()?;
        Ok(p)
    }

    /// Uses [`default_c_spread`].
    pub fn with_default_spread(c0: f64, c1: f64) -> Result<Self> {
        Self::new(c0, c1, default_c_spread(c0, c1))
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.c0) || !open_unit(self.c1) {
            return Err(Error::Parameter(format!("c0, c1 must lie in (0,1), got ({}, {})", self.c0, self.c1)));
        }
        if !(self.c_spread > 0.0 && self.c_spread < 0.2) {
            return Err(Error::Parameter(format!("c_spread must lie in (0, 1/5), got {}", self.c_spread)));
        }
        Ok(())
    }

    /// Lower edge of the spread window, `c1 / sqrt(2n)`.
    pub fn window_low(&self, n: usize) -> f64 {
        self.c1 / (2.0 * n as f64).sqrt()
    }

    /// Upper edge of the spread window, `1 / sqrt(c0 n)`.
    pub fn window_high(&self, n: usize) -> f64 {
        1.0 / (self.c0 * n as f64).sqrt()
    }

    /// `ceil(c_spread n)`.
    pub fn spread_size(&self, n: usize) -> usize {
        ceil_count(self.c_spread * n as f64)
    }
}

impl Default for SphereParams {
    fn default() -> Self {
        Self { c0: 0.5, c1: 0.5, c_spread: default_c_spread(0.5, 0.5) }
    }
}

/// A spread fraction that always leaves room for two spread sets.
///
/// Incompressible vectors have more than `c0 c1^2 n / 2` coordinates in the
/// spread window (the window's coordinates carry more than `c1^2/2` of the
/// mass, each at most `1/(c0 n)`), so `c0 c1^2 / 4` admits `2 ceil(c n)`
/// qualifying indices up to rounding.
pub fn default_c_spread(c0: f64, c1: f64) -> f64 {
    (c0 * c1 * c1 / 4.0).min(1.0 / 6.0)
}

// Products like 0.04 * 100 land one ulp above the integer.
const COUNT_SLACK: f64 = 1e-9;

pub(crate) fn ceil_count(x: f64) -> usize {
    (x - COUNT_SLACK).ceil().max(0.0) as usize
}

pub(crate) fn floor_count(x: f64) -> usize {
    (x + COUNT_SLACK).floor().max(0.0) as usize
}

/// Distance from `v` to the set of `k`-sparse vectors: the norm of `v` with
/// its `k` largest-magnitude coordinates removed.
pub fn sparse_residual(v: &UnitVector, k: usize) -> f64 {
    let mut mags: Vec<f64> = v.coords().iter().map(|x| x.abs()).collect();
    if k >= mags.len() {
        return 0.0;
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    l2(&mags[k..])
}

/// Closed convention: residual exactly `c1` counts as compressible.
pub fn is_compressible(v: &UnitVector, params: &SphereParams) -> bool {
    let k = ceil_count(params.c0 * v.dim() as f64);
    sparse_residual(v, k) <= params.c1
}

/// Indices whose magnitude lies in `[c1/sqrt(2n), 1/sqrt(c0 n)]`, ascending.
pub fn qualifying_indices(v: &UnitVector, params: &SphereParams) -> Vec<usize> {
    let n = v.dim();
    let (lo, hi) = (params.window_low(n), params.window_high(n));
    v.coords()
        .iter()
        .enumerate()
        .filter(|(_, x)| {
            let a = x.abs();
            a >= lo && a <= hi
        })
        .map(|(i, _)| i)
        .collect()
}

/// `Spread(v)`, its block-aligned prefix `Spread_lambda(v)` and the blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadAssignment {
    pub spread: Vec<usize>,
    pub lambda: f64,
    pub block_size: usize,
    pub blocks: Vec<Vec<usize>>,
    pub covered: Vec<usize>,
}

impl SpreadAssignment {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }
}

/// Deterministic spread assignment.
///
/// `Spread(v)` is the first `ceil(c_spread n)` qualifying indices in ascending
/// order; blocks are consecutive runs of `floor(lambda n)` of them, and
/// `Spread_lambda(v)` is the largest whole number of blocks that fits. The
/// result depends on `v` only through its qualifying index set.
pub fn spread_assignment(v: &UnitVector, params: &SphereParams, lambda: f64) -> Result<SpreadAssignment> {
    params.validate()?;
    let n = v.dim();
    if !(lambda > 0.0 && lambda <= params.c_spread) {
        return Err(Error::Parameter(format!(
            "lambda must lie in (0, c_spread = {}], got {lambda}",
            params.c_spread
        )));
    }
    let block_size = floor_count(lambda * n as f64);
    if block_size == 0 {
        return Err(Error::Parameter(format!("floor(lambda n) = 0 for lambda = {lambda}, n = {n}")));
    }
    if is_compressible(v, params) {
        return Err(Error::Structural("vector is compressible".into()));
    }
    let want = params.spread_size(n);
    let qualifying = qualifying_indices(v, params);
    if qualifying.len() < want {
        return Err(Error::Structural(format!(
            "only {} indices in the spread window, need {want}",
            qualifying.len()
        )));
    }
    let spread: Vec<usize> = qualifying[..want].to_vec();
    let num_blocks = want / block_size;
    if num_blocks == 0 {
        return Err(Error::Structural(format!("block size {block_size} exceeds spread size {want}")));
    }
    let covered: Vec<usize> = spread[..num_blocks * block_size].to_vec();
    let blocks = covered.chunks(block_size).map(|c| c.to_vec()).collect();
    Ok(SpreadAssignment { spread, lambda, block_size, blocks, covered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn e1(n: usize) -> UnitVector {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        UnitVector::new(v).unwrap()
    }

    fn flat(n: usize) -> UnitVector {
        UnitVector::normalize(&vec![1.0; n]).unwrap()
    }

    fn random_unit(n: usize, seed: u64) -> UnitVector {
        let mut rng = crate::rng::rng_from_seed(seed);
        let v: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        UnitVector::normalize(&v).unwrap()
    }

    // every support of size k, brute force
    fn brute_residual(v: &UnitVector, k: usize) -> f64 {
        let n = v.dim();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let r: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| v.coords()[i].powi(2)).sum();
            best = best.min(r.sqrt());
        }
        best
    }

    #[test]
    fn rejects_non_unit() {
        assert!(UnitVector::new(vec![1.0, 1.0]).is_err());
        assert!(UnitVector::normalize(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn residual_examples() {
        assert_eq!(sparse_residual(&e1(8), 1), 0.0);
        assert!((sparse_residual(&flat(8), 4) - 0.5f64.sqrt()).abs() < 1e-15);
        for seed in 0..20 {
            let v = random_unit(8, seed);
            assert!((sparse_residual(&v, 3) - brute_residual(&v, 3)).abs() < 1e-14);
        }
    }

    #[test]
    fn compressibility_examples() {
        let p = SphereParams::new(0.5, 0.5, 0.1).unwrap();
        assert!(is_compressible(&e1(10), &p));
        for n in [4, 9, 16, 33] {
            assert!(!is_compressible(&flat(n), &p));
        }
    }

    #[test]
    fn boundary_residual_is_compressible() {
        // residual after the top 2 of 4 coordinates is exactly 0.5
        let v = UnitVector::new(vec![0.75f64.sqrt() / 2f64.sqrt(), 0.75f64.sqrt() / 2f64.sqrt(), 0.25f64.sqrt(), 0.0])
            .unwrap();
        let r = sparse_residual(&v, 2);
        let p = SphereParams::new(0.5, r, 0.1).unwrap();
        assert!(is_compressible(&v, &p));
        let p = SphereParams::new(0.5, r * (1.0 - 1e-12), 0.1).unwrap();
        assert!(!is_compressible(&v, &p));
    }

    #[test]
    fn flat_vector_spread() {
        let p = SphereParams::new(0.5, 0.5, 0.125).unwrap();
        let a = spread_assignment(&flat(16), &p, 0.125).unwrap();
        assert_eq!(a.spread, vec![0, 1]);
        assert_eq!(a.blocks, vec![vec![0, 1]]);
        assert_eq!(a.covered, vec![0, 1]);
    }

    #[test]
    fn compressible_spread_fails() {
        let p = SphereParams::new(0.5, 0.5, 0.125).unwrap();
        assert!(matches!(spread_assignment(&e1(16), &p, 0.125), Err(Error::Structural(_))));
    }

    #[test]
    fn spread_matches_direct_scan() {
        // Gaussian vectors are compressible at c0 = 1/2, so a smaller c0 is used
        let p = SphereParams::new(0.1, 0.5, 0.19).unwrap();
        for seed in 0..30 {
            let v = random_unit(64, seed);
            let a = spread_assignment(&v, &p, 0.05).unwrap();
            let lo = 0.5 / (128f64).sqrt();
            let hi = 1.0 / (6.4f64).sqrt();
            let direct: Vec<usize> = (0..64).filter(|&i| (lo..=hi).contains(&v.coords()[i].abs())).collect();
            assert_eq!(a.spread[..], direct[..a.spread.len()]);
            assert_eq!(a.block_size, 3);
            assert_eq!(a.blocks.len(), 13 / 3);
            let mut flat_blocks: Vec<usize> = a.blocks.concat();
            flat_blocks.sort();
            assert_eq!(flat_blocks, a.covered);
            assert!(a.covered.len() as f64 >= 0.19 / 2.0 * 64.0);
        }
    }

    #[test]
    fn lambda_range_enforced() {
        let p = SphereParams::new(0.5, 0.5, 0.1).unwrap();
        assert!(spread_assignment(&flat(64), &p, 0.2).is_err());
        assert!(spread_assignment(&flat(64), &p, 0.001).is_err());
        assert!(SphereParams::new(0.5, 0.5, 0.2).is_err());
    }

    #[test]
    fn spread_size_holds_with_default_fraction() {
        // more than 2 ceil(c n) qualifying indices for incompressible random vectors
        for (c0, c1) in [(0.5, 0.5), (0.25, 0.6), (0.8, 0.3)] {
            let p = SphereParams::with_default_spread(c0, c1).unwrap();
            for seed in 0..40 {
                let n = 16 + (seed as usize * 37) % 241;
                let v = random_unit(n, seed);
                if is_compressible(&v, &p) {
                    continue;
                }
                let q = qualifying_indices(&v, &p).len();
                assert!(q >= 2 * p.spread_size(n), "n={n} q={q}");
            }
        }
    }

    proptest! {
        #[test]
        fn residual_monotone(seed in any::<u64>(), n in 1usize..40) {
            let v = random_unit(n, seed);
            prop_assert!((sparse_residual(&v, 0) - 1.0).abs() < 1e-12);
            prop_assert_eq!(sparse_residual(&v, n), 0.0);
            let mut prev = f64::INFINITY;
            for k in 0..=n {
                let r = sparse_residual(&v, k);
                prop_assert!(r <= prev);
                prev = r;
            }
        }

        #[test]
        fn residual_matches_brute_force(seed in any::<u64>(), n in 1usize..=10, k in 0usize..=10) {
            let v = random_unit(n, seed);
            let k = k.min(n);
            prop_assert!((sparse_residual(&v, k) - brute_residual(&v, k)).abs() < 1e-13);
        }

        #[test]
        fn assignment_depends_only_on_qualifying_set(seed in any::<u64>()) {
            let p = SphereParams::new(0.1, 0.5, 0.19).unwrap();
            let v = random_unit(80, seed);
            prop_assume!(!is_compressible(&v, &p));
            // rescale qualifying magnitudes within the window; signs flipped
            let q = qualifying_indices(&v, &p);
            let mut w = v.coords().to_vec();
            for &i in &q { w[i] = -w[i]; }
            let w = UnitVector::new(w).unwrap();
            let a = spread_assignment(&v, &p, 0.05);
            let b = spread_assignment(&w, &p, 0.05);
            prop_assert_eq!(a.ok(), b.ok());
        }
    }
}
