//! Lévy concentration of weighted sums and the inequalities that bound it.

pub mod atoms;
pub mod bounds;
pub mod levy;
pub mod quadrature;

pub use atoms::{weighted_sum_atoms, Atom, AtomDistribution};
pub use bounds::{esseen_levy_bound, mrlcd_anticonc_bound, rogozin_bound, tensorization_bound, MrlcdBound};
pub use levy::{hoeffding_radius, levy, levy_exact, levy_mc, ConcentrationEstimate, ConcentrationMethod};
