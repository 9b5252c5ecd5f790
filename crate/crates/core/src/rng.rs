//! Seed derivation for reproducible trials.
//!
//! Trial `t` of a run with master seed `m` draws from a ChaCha8 stream seeded
//! with [`derive_seed`]`(m, t)`. The derivation is two rounds of the
//! SplitMix64 finalizer and is part of the report format: changing it changes
//! every recorded experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed: `splitmix64(master ^ splitmix64(trial))`.
pub fn derive_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial))
}

/// Generator for a raw seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `trial` of a run with master seed `master`.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(master, trial))
}
