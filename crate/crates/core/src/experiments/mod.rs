//! Seeded, reproducible desk-scale experiments.
//!
//! Every runner takes an [`ExperimentConfig`] and returns an
//! [`ExperimentReport`]. Trial `t` draws from the generator
//! [`crate::rng::trial_rng`]`(master_seed, t)` and records are merged in
//! trial order, so serial and parallel runs give identical reports.

pub mod checks;
pub mod config;
pub mod decoupling;
pub mod denominator;
pub mod quadratic;
pub mod replacement;
pub mod report;
pub mod single;
pub mod structure;
pub mod sval;

pub use checks::{run_mrlcd_smallball_check, run_rounding_check, run_tensorization_check};
pub use config::{ExperimentConfig, QuadraticTarget};
pub use decoupling::{decoupling_sides, run_decoupling_check, DecouplingPoint};
pub use denominator::run_denominator_check;
pub use quadratic::{run_identity_check, run_quadratic_smallball};
pub use replacement::{replacement_ratio, run_replacement_check};
pub use report::{ExperimentReport, Row, SCHEMA_VERSION};
pub use single::{run_lcd, run_mrlcd, run_round, run_threshold, RoundingBound};
pub use structure::run_structure_scan;
pub use sval::{run_singularity_exact, run_sval_tail, singularity_exact};
