//! Exact laws of weighted sums of discrete variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ensembles::EntryLaw;
use crate::error::{Error, Result};

/// Values closer than `MERGE_RELATIVE * max(1, |value|)` are one atom.
pub const MERGE_RELATIVE: f64 = 1e-9;

/// Largest dimension enumerated exactly for two-point laws.
pub const TWO_POINT_CAP: usize = 26;
/// Largest dimension enumerated exactly for three-point laws.
pub const THREE_POINT_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// A finitely supported law: strictly increasing values, positive masses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomDistribution {
    atoms: Vec<Atom>,
}

fn close(a: f64, b: f64) -> bool {
    (b - a).abs() <= MERGE_RELATIVE * a.abs().max(1.0)
}

impl AtomDistribution {
    /// Sorts, drops zero masses and merges values within the merge tolerance.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut raw: Vec<Atom> = pairs
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(value, prob)| Atom { value, prob })
            .collect();
        raw.sort_by(|a, b| a.value.total_cmp(&b.value));
        Self::from_sorted(raw)
    }

    fn from_sorted(sorted: Vec<Atom>) -> Self {
        let mut out = Merger::default();
        for a in sorted {
            out.push(a);
        }
        out.finish()
    }

    /// Point mass at zero.
    pub fn dirac(value: f64) -> Self {
        Self { atoms: vec![Atom { value, prob: 1.0 }] }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).sum()
    }

    pub fn max_prob(&self) -> f64 {
        self.atoms.iter().fold(0.0, |m, a| m.max(a.prob))
    }

    /// Largest minus smallest support point.
    pub fn diameter(&self) -> f64 {
        match (self.atoms.first(), self.atoms.last()) {
            (Some(a), Some(b)) => b.value - a.value,
            _ => 0.0,
        }
    }

    /// Law of `X * c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self::from_pairs(self.atoms.iter().map(|a| (a.value * c, a.prob)))
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    ///
    /// Each row `x + Y` is already sorted, so the rows are combined by a k-way
    /// merge over the shorter operand.
    pub fn convolve(&self, other: &Self) -> Self {
        let (rows, cols) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        if rows.is_empty() || cols.is_empty() {
            return Self::default();
        }
        let mut heap: BinaryHeap<Cursor> = rows
            .atoms
            .iter()
            .enumerate()
            .map(|(r, a)| Cursor { value: a.value + cols.atoms[0].value, row: r, col: 0 })
            .collect();
        let mut out = Merger::with_capacity(rows.len() * cols.len());
        while let Some(c) = heap.pop() {
            let ra = rows.atoms[c.row];
            out.push(Atom { value: c.value, prob: ra.prob * cols.atoms[c.col].prob });
            let next = c.col + 1;
            if next < cols.len() {
                heap.push(Cursor { value: ra.value + cols.atoms[next].value, row: c.row, col: next });
            }
        }
        out.finish()
    }

    /// Two-column CSV `value,prob` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "prob"])?;
        for a in &self.atoms {
            w.write_record([format!("{}", a.value), format!("{}", a.prob)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Default)]
struct Merger {
    out: Vec<Atom>,
    // value of the first atom folded into the current group
    anchor: f64,
    weighted: f64,
}

impl Merger {
    fn with_capacity(n: usize) -> Self {
        Self { out: Vec::with_capacity(n.min(1 << 20)), ..Default::default() }
    }

    fn push(&mut self, a: Atom) {
        match self.out.last_mut() {
            Some(last) if close(self.anchor, a.value) => {
                last.prob += a.prob;
                self.weighted += a.prob * a.value;
                last.value = self.weighted / last.prob;
            }
            _ => {
                self.anchor = a.value;
                self.weighted = a.prob * a.value;
                self.out.push(a);
            }
        }
    }

    fn finish(self) -> AtomDistribution {
        AtomDistribution { atoms: self.out }
    }
}

#[derive(Clone, Copy)]
struct Cursor {
    value: f64,
    row: usize,
    col: usize,
}

impl PartialEq for Cursor {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cursor {}
impl PartialOrd for Cursor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cursor {
    // min-heap on value, ties by row for a deterministic merge order
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.row.cmp(&self.row))
    }
}

/// Exact-enumeration cap for `law`, or `None` if the law is not atomic.
pub fn dimension_cap(law: &EntryLaw) -> Option<usize> {
    match law.atoms()?.len() {
        0..=2 => Some(TWO_POINT_CAP),
        3 => Some(THREE_POINT_CAP),
        _ => None,
    }
}

fn law_atoms(law: &EntryLaw) -> Result<Vec<(f64, f64)>> {
    law.validate()?;
    law.atoms()
        .ok_or_else(|| Error::Parameter(format!("law {law} has no finite atom set; use Monte Carlo")))
}

/// Law of `sum_i w_i b_i` for i.i.d. `b_i ~ law`, progressively convolved.
fn enumerate_half(weights: &[f64], base: &[(f64, f64)]) -> AtomDistribution {
    weights.iter().fold(AtomDistribution::dirac(0.0), |acc, &w| {
        let single = AtomDistribution::from_pairs(base.iter().map(|&(v, p)| (w * v, p)));
        acc.convolve(&single)
    })
}

/// Exact law of `sum_i weights[i] b_i` with `b_i` i.i.d. from an atomic law.
///
/// The weights are split into two halves whose laws are enumerated
/// independently and then combined by one sorted convolution.
pub fn weighted_sum_atoms(weights: &[f64], law: &EntryLaw) -> Result<AtomDistribution> {
    let base = law_atoms(law)?;
    let cap = dimension_cap(law).expect("atomic law");
    if weights.len() > cap {
        return Err(Error::Capacity(format!(
            "exact enumeration of {} weights exceeds the cap of {cap} for {law}; use levy_mc",
            weights.len()
        )));
    }
    if !weights.iter().all(|w| w.is_finite()) {
        return Err(Error::Numeric("non-finite weight".into()));
    }
    let (left, right) = weights.split_at(weights.len() / 2);
    let (a, b) = rayon::join(|| enumerate_half(left, &base), || enumerate_half(right, &base));
    Ok(a.convolve(&b))
}
