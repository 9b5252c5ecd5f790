//! Arithmetic-structure diagnostics and small-ball machinery for random
//! symmetric matrices.
//!
//! The crate computes least common denominators with certified brackets,
//! their median over spread blocks, thresholds of signed-Bernoulli sums,
//! exact Lévy concentration of weighted sums, randomized rounding with
//! per-instance certification, and a set of seeded experiments on the
//! smallest singular value of symmetric matrices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anticonc;
pub mod arithmetic;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod rng;
pub mod rounding;

pub use anticonc::{levy, levy_exact, levy_mc, weighted_sum_atoms, AtomDistribution, ConcentrationEstimate};
pub use arithmetic::{lcd, median_threshold, mrlcd, threshold, LcdBracket, LcdParams, MrlcdReport, ThresholdReport};
pub use ensembles::{EntryLaw, SymmetricMatrixSample};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, ExperimentReport};
pub use geometry::{SphereParams, UnitVector};
pub use rounding::{levy_round, randomized_round, CertConstants, RoundingResult};
