//! Arithmetic structure of unit vectors: LCD, its median over spread blocks,
//! the threshold and admissible sets.

pub mod admissible;
pub mod lcd;
pub mod mrlcd;
pub mod threshold;

pub use admissible::{is_admissible, AdmissibilityReport, AdmissibilityViolation};
pub use lcd::{lattice_distance, lcd, lcd_rhs, BracketStatus, LcdBracket, LcdParams};
pub use mrlcd::{bracket_membership, level_set_member, mrlcd, BlockLcd, Membership, MrlcdReport};
pub use threshold::{
    median_threshold, threshold, threshold_of_distribution, BlockThreshold, MedianThresholdReport, ThresholdCertificate,
    ThresholdReport,
};
