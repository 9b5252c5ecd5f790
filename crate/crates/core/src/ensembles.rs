//! Random symmetric matrices and the dense linear algebra built on them.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default standard deviation of the Gaussian part of [`EntryLaw::PerturbedRademacher`].
pub const DEFAULT_PERTURBATION_SIGMA: f64 = 1e-12;

/// Law of a single matrix entry or vector coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EntryLaw {
    /// Uniform on {-1, +1}.
    Rademacher,
    Gaussian { mean: f64, variance: f64 },
    /// `Ber(p) - Ber'(p)`: atoms -1, 0, +1 with masses p(1-p), 1-2p(1-p), p(1-p).
    SignedBernoulli { p: f64 },
    Uniform { a: f64, b: f64 },
    /// Rademacher plus an independent centered Gaussian with standard deviation `sigma`.
    PerturbedRademacher { sigma: f64 },
}

impl EntryLaw {
    pub fn standard_gaussian() -> Self {
        EntryLaw::Gaussian { mean: 0.0, variance: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EntryLaw::Rademacher => Ok(()),
            EntryLaw::Gaussian { mean, variance } => {
                if !mean.is_finite() || !(variance.is_finite() && variance > 0.0) {
                    return Err(Error::Parameter(format!(
                        "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
                    )));
                }
                Ok(())
            }
            EntryLaw::SignedBernoulli { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Parameter(format!("signed bernoulli p must lie in (0,1), got {p}")));
                }
                Ok(())
            }
            EntryLaw::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::Parameter(format!("uniform needs finite a < b, got ({a}, {b})")));
                }
                Ok(())
            }
            EntryLaw::PerturbedRademacher { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::Parameter(format!("perturbation sigma must be >= 0, got {sigma}")));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            EntryLaw::Gaussian { mean, .. } => mean,
            EntryLaw::Uniform { a, b } => 0.5 * (a + b),
            _ => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            EntryLaw::Rademacher => 1.0,
            EntryLaw::Gaussian { variance, .. } => variance,
            EntryLaw::SignedBernoulli { p } => 2.0 * p * (1.0 - p),
            EntryLaw::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            EntryLaw::PerturbedRademacher { sigma } => 1.0 + sigma * sigma,
        }
    }

    /// Draws one value. Assumes the law has been validated.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryLaw::Rademacher => rademacher(rng),
            EntryLaw::Gaussian { mean, variance } => {
                Normal::new(mean, variance.sqrt()).expect("validated gaussian").sample(rng)
            }
            EntryLaw::SignedBernoulli { p } => {
                let b = rng.gen_bool(p) as i8;
                let b2 = rng.gen_bool(p) as i8;
                f64::from(b - b2)
            }
            EntryLaw::Uniform { a, b } => rng.gen_range(a..b),
            EntryLaw::PerturbedRademacher { sigma } => {
                let s = rademacher(rng);
                if sigma == 0.0 {
                    s
                } else {
                    s + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
                }
            }
        }
    }

    /// Modulus of the characteristic function `|E exp(i t xi)|`.
    pub fn char_fn_abs(&self, t: f64) -> f64 {
        match *self {
            EntryLaw::Rademacher => t.cos().abs(),
            EntryLaw::Gaussian { variance, .. } => (-0.5 * variance * t * t).exp(),
            EntryLaw::SignedBernoulli { p } => {
                let q = p * (1.0 - p);
                (1.0 - 2.0 * q * (1.0 - t.cos())).abs()
            }
            EntryLaw::Uniform { a, b } => {
                let w = b - a;
                let x = 0.5 * w * t;
                if x.abs() < 1e-8 {
                    1.0
                } else {
                    (x.sin() / x).abs()
                }
            }
            EntryLaw::PerturbedRademacher { sigma } => t.cos().abs() * (-0.5 * sigma * sigma * t * t).exp(),
        }
    }

    /// Atoms `(value, probability)` for laws with finite support.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            EntryLaw::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            EntryLaw::SignedBernoulli { p } => {
                let q = p * (1.0 - p);
                Some(vec![(-1.0, q), (0.0, 1.0 - 2.0 * q), (1.0, q)])
            }
            EntryLaw::PerturbedRademacher { sigma: 0.0 } => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            _ => None,
        }
    }

    /// Whether every draw lies in [-1, 1].
    pub fn supported_in_unit_interval(&self) -> bool {
        match *self {
            EntryLaw::Rademacher | EntryLaw::SignedBernoulli { .. } => true,
            EntryLaw::Uniform { a, b } => a >= -1.0 && b <= 1.0,
            EntryLaw::PerturbedRademacher { sigma } => sigma == 0.0,
            EntryLaw::Gaussian { .. } => false,
        }
    }
}

fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EntryLaw::Rademacher => write!(f, "rademacher"),
            EntryLaw::Gaussian { mean, variance } => write!(f, "gaussian:{mean}:{variance}"),
            EntryLaw::SignedBernoulli { p } => write!(f, "signed-bernoulli:{p}"),
            EntryLaw::Uniform { a, b } => write!(f, "uniform:{a}:{b}"),
            EntryLaw::PerturbedRademacher { sigma } => write!(f, "perturbed-rademacher:{sigma}"),
        }
    }
}

/// Parses `rademacher`, `gaussian[:mean:variance]`, `signed-bernoulli:p`,
/// `uniform:a:b` and `perturbed-rademacher[:sigma]`.
impl FromStr for EntryLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
        let nums: Vec<f64> = parts
            .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad law parameter {x:?}: {e}"))))
            .collect::<Result<_>>()?;
        let law = match (kind.as_str(), nums.as_slice()) {
            ("rademacher" | "rad", []) => EntryLaw::Rademacher,
            ("gaussian" | "normal", []) => EntryLaw::standard_gaussian(),
            ("gaussian" | "normal", [m, v]) => EntryLaw::Gaussian { mean: *m, variance: *v },
            ("signed-bernoulli" | "sb", [p]) => EntryLaw::SignedBernoulli { p: *p },
            ("uniform", [a, b]) => EntryLaw::Uniform { a: *a, b: *b },
            ("perturbed-rademacher" | "prad", []) => {
                EntryLaw::PerturbedRademacher { sigma: DEFAULT_PERTURBATION_SIGMA }
            }
            ("perturbed-rademacher" | "prad", [s]) => EntryLaw::PerturbedRademacher { sigma: *s },
            _ => return Err(Error::Config(format!("unrecognized law {s:?}"))),
        };
        law.validate()?;
        Ok(law)
    }
}

/// A sampled symmetric matrix together with the inputs that reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrixSample {
    pub n: usize,
    pub entries: DMatrix<f64>,
    pub law: EntryLaw,
    pub seed: u64,
}

impl SymmetricMatrixSample {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Row-major CSV, each entry in shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix_csv(&self.entries, out)
    }
}

/// Samples the upper triangle (diagonal included) i.i.d. from `law` in
/// row-major order and mirrors it.
pub fn sample_symmetric(n: usize, law: EntryLaw, seed: u64) -> Result<SymmetricMatrixSample> {
    if n == 0 {
        return Err(Error::Parameter("matrix dimension must be >= 1".into()));
    }
    law.validate()?;
    let mut rng = rng_from_seed(seed);
    let entries = sample_symmetric_with(n, &law, &mut rng);
    Ok(SymmetricMatrixSample { n, entries, law, seed })
}

/// Same draw order as [`sample_symmetric`] but from a caller-owned generator.
pub fn sample_symmetric_with<R: Rng + ?Sized>(n: usize, law: &EntryLaw, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x = law.sample(rng);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

pub fn sample_vector<R: Rng + ?Sized>(n: usize, law: &EntryLaw, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| law.sample(rng)))
}

/// Bitwise symmetry.
pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)].to_bits() == m[(j, i)].to_bits()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvdMethod {
    /// Symmetric eigendecomposition; singular values are absolute eigenvalues.
    FullDecomposition,
    /// Golub-Kahan bidiagonalization, used for non-symmetric input.
    Bidiagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularValueResult {
    pub s_min: f64,
    /// Operator norm.
    pub s_max: f64,
    pub method: SvdMethod,
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("matrix has non-finite entries".into()))
    }
}

/// Smallest and largest singular values.
///
/// Symmetric input goes through the eigendecomposition so the condition number
/// is never squared; anything else falls back to the SVD.
pub fn singular_extremes(m: &DMatrix<f64>) -> Result<SingularValueResult> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Precondition(format!("expected a nonempty square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    check_finite(m)?;
    if is_symmetric(m) {
        let eig = m.clone().symmetric_eigen();
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l.abs()), hi.max(l.abs())));
        Ok(SingularValueResult { s_min: lo, s_max: hi, method: SvdMethod::FullDecomposition })
    } else {
        let sv = m.clone().singular_values();
        let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sv.iter().cloned().fold(0.0, f64::max);
        Ok(SingularValueResult { s_min: lo, s_max: hi, method: SvdMethod::Bidiagonal })
    }
}

/// Square root of the sum of squared entries.
pub fn hilbert_schmidt_norm(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Euclidean distance from row `i` (0-based) to the span of the other rows.
///
/// For an invertible square matrix this is the length of the projection of
/// row `i` onto the unit normal of the hyperplane spanned by the others; the
/// normal is the refined solution of `M c = e_i`. Otherwise the row is
/// projected onto an SVD basis of the span.
pub fn distance_to_rowspan(m: &DMatrix<f64>, i: usize) -> Result<f64> {
    let n = m.nrows();
    if i >= n {
        return Err(Error::Precondition(format!("row index {i} out of range for {n} rows")));
    }
    check_finite(m)?;
    let row: DVector<f64> = m.row(i).transpose();
    if n == 1 {
        return Ok(row.norm());
    }
    if m.is_square() {
        if let Ok(c) = solve_checked(m, &DVector::from_fn(n, |k, _| f64::from(u8::from(k == i)))) {
            return Ok(dot2(row.iter().zip(c.iter()).map(|(&a, &b)| (a, b))).abs() / c.norm());
        }
    }
    let others = m.clone().remove_row(i).transpose();
    let svd = others.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = (m.ncols().max(n) as f64) * f64::EPSILON * smax;
    let mut resid = row.clone();
    // second pass against the same basis removes rounding left by the first
    for _ in 0..2 {
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > tol {
                let col = u.column(k);
                let c = col.dot(&resid);
                resid.axpy(-c, &col, 1.0);
            }
        }
    }
    Ok(resid.norm())
}

/// Both sides of the row-distance identity for a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticIdentity {
    /// Distance by projection.
    pub direct: f64,
    /// `|<A'^{-1}X, X> - a_ii| / sqrt(1 + |A'^{-1}X|^2)`.
    pub formula: f64,
}

/// Normalized quadratic-form statistic `|<A^{-1}X, X> - u| / sqrt(1 + |A^{-1}X|^2)`.
///
/// Fails with a precondition error if `a` is singular or the solve's normwise
/// backward error exceeds `1e-8`.
pub fn quadratic_form_statistic(a: &DMatrix<f64>, x: &DVector<f64>, u: f64) -> Result<f64> {
    let y = solve_checked(a, x)?;
    let q = dot2(y.iter().zip(x.iter()).map(|(&a, &b)| (a, b)));
    Ok((q - u).abs() / (1.0 + y.norm_squared()).sqrt())
}

/// Dot product with error-free products and compensated summation; about
/// as accurate as evaluating in twice the working precision.
pub fn dot2(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        let p = a * b;
        let ep = a.mul_add(b, -p);
        let t = s + p;
        let z = t - s;
        c += ep + ((s - (t - z)) + (p - z));
        s = t;
    }
    s + c
}

const REFINE_STEPS: usize = 10;

/// Solves `a y = x` by LU with iterative refinement on compensated
/// residuals, rejecting singular or inaccurate solves (normwise backward
/// error above `1e-8`).
pub fn solve_checked(a: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_finite(a)?;
    let lu = a.clone().lu();
    let mut y = lu.solve(x).ok_or_else(|| Error::Precondition("matrix is singular".into()))?;
    let n = x.len();
    for _ in 0..REFINE_STEPS {
        if !y.iter().all(|v| v.is_finite()) {
            break;
        }
        let r = DVector::from_fn(n, |i, _| {
            dot2(std::iter::once((x[i], 1.0)).chain((0..n).map(|j| (a[(i, j)], -y[j]))))
        });
        let Some(d) = lu.solve(&r) else { break };
        y += &d;
        if !(d.norm() > f64::EPSILON * y.norm()) {
            break;
        }
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::Precondition("solve produced non-finite values".into()));
    }
    let resid = (a * &y - x).norm();
    let scale = a.norm() * y.norm() + x.norm();
    if resid > 1e-8 * scale {
        return Err(Error::Precondition(format!("solve residual {resid:e} exceeds tolerance")));
    }
    Ok(y)
}

/// Splits a symmetric matrix at index `i` into the minor with row and column
/// `i` removed, the off-diagonal part of column `i`, and the diagonal entry.
pub fn border_split(m: &DMatrix<f64>, i: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
    let minor = m.clone().remove_row(i).remove_column(i);
    let col: DVector<f64> = m.column(i).into_owned().remove_row(i);
    (minor, col, m[(i, i)])
}

/// Inverse of [`border_split`] for `i = 0`.
pub fn border_matrix(minor: &DMatrix<f64>, x: &DVector<f64>, corner: f64) -> DMatrix<f64> {
    let n = minor.nrows() + 1;
    let mut m = DMatrix::zeros(n, n);
    m[(0, 0)] = corner;
    for k in 0..n - 1 {
        m[(0, k + 1)] = x[k];
        m[(k + 1, 0)] = x[k];
    }
    m.view_mut((1, 1), (n - 1, n - 1)).copy_from(minor);
    m
}

/// Computes the distance of row `i` to the other rows both by projection and
/// by the quadratic-form expression through the minor.
pub fn quadratic_distance_identity(m: &DMatrix<f64>, i: usize) -> Result<QuadraticIdentity> {
    let n = m.nrows();
    if !m.is_square() || i >= n || n < 2 {
        return Err(Error::Precondition(format!("need square n >= 2 and i < n, got {}x{} and i = {i}", n, m.ncols())));
    }
    let (minor, x, corner) = border_split(m, i);
    let formula = quadratic_form_statistic(&minor, &x, corner).map_err(|e| match e {
        Error::Precondition(msg) => Error::Precondition(format!("minor with row/column {i} removed: {msg}")),
        other => other,
    })?;
    let direct = distance_to_rowspan(m, i)?;
    Ok(QuadraticIdentity { direct, formula })
}

pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| format!("{}", m[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    #[test]
    fn one_by_one_rademacher_is_a_sign() {
        for seed in 0..20 {
            let s = sample_symmetric(1, EntryLaw::Rademacher, seed).unwrap();
            assert!(s.entries[(0, 0)] == 1.0 || s.entries[(0, 0)] == -1.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_symmetric(3, EntryLaw::Rademacher, 99).unwrap();
        let b = sample_symmetric(3, EntryLaw::Rademacher, 99).unwrap();
        assert!(a.entries.iter().zip(b.entries.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_symmetric(2, EntryLaw::SignedBernoulli { p: 1.0 }, 0).is_err());
        assert!(sample_symmetric(2, EntryLaw::SignedBernoulli { p: 0.0 }, 0).is_err());
        assert!(sample_symmetric(2, EntryLaw::PerturbedRademacher { sigma: -1.0 }, 0).is_err());
        assert!(sample_symmetric(0, EntryLaw::Rademacher, 0).is_err());
    }

    #[test]
    fn sample_mean_is_centered() {
        let n = 200;
        let count = (n * (n + 1) / 2) as f64;
        let bound = 4.0 / count.sqrt();
        let ok = (0..100)
            .filter(|&seed| {
                let s = sample_symmetric(n, EntryLaw::Rademacher, seed).unwrap();
                let mut sum = 0.0;
                for i in 0..n {
                    for j in i..n {
                        sum += s.entries[(i, j)];
                    }
                }
                (sum / count).abs() <= bound
            })
            .count();
        assert!(ok >= 99, "{ok}/100 seeds within bound");
    }

    #[test]
    fn law_parsing_round_trips() {
        for s in ["rademacher", "gaussian:0:1", "signed-bernoulli:0.1", "uniform:-1:1", "perturbed-rademacher:0.000001"] {
            let law: EntryLaw = s.parse().unwrap();
            assert_eq!(law.to_string().parse::<EntryLaw>().unwrap(), law);
        }
        assert!("signed-bernoulli:2".parse::<EntryLaw>().is_err());
        assert!("cauchy".parse::<EntryLaw>().is_err());
    }

    #[test]
    fn law_moments() {
        assert_eq!(EntryLaw::Rademacher.variance(), 1.0);
        assert_eq!(EntryLaw::standard_gaussian().variance(), 1.0);
        let atoms = EntryLaw::SignedBernoulli { p: 0.1 }.atoms().unwrap();
        assert!((atoms[1].1 - 0.82).abs() < 1e-15);
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_extremes() {
        let r = singular_extremes(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!((r.s_min, r.s_max), (1.0, 1.0));
    }

    #[test]
    fn two_by_two_extremes() {
        let r = singular_extremes(&dmatrix![1.0, 1.0; 1.0, 2.0]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((r.s_min - (3.0 - s5) / 2.0).abs() < 1e-14);
        assert!((r.s_max - (3.0 + s5) / 2.0).abs() < 1e-14);
        assert_eq!(r.method, SvdMethod::FullDecomposition);
    }

    #[test]
    fn repeated_row_is_singular() {
        let m = dmatrix![1.0, 2.0, 3.0; 1.0, 2.0, 3.0; 0.5, -1.0, 4.0];
        let r = singular_extremes(&m).unwrap();
        assert!(r.s_min < 1e-10);
        assert_eq!(r.method, SvdMethod::Bidiagonal);
        let s = dmatrix![1.0, 1.0, 2.0; 1.0, 1.0, 2.0; 2.0, 2.0, 5.0];
        assert!(singular_extremes(&s).unwrap().s_min < 1e-10);
    }

    #[test]
    fn non_finite_is_rejected() {
        let m = dmatrix![1.0, f64::NAN; f64::NAN, 1.0];
        assert!(matches!(singular_extremes(&m), Err(Error::Numeric(_))));
    }

    #[test]
    fn rowspan_distances() {
        assert!((distance_to_rowspan(&DMatrix::identity(2, 2), 0).unwrap() - 1.0).abs() < 1e-15);
        let m = dmatrix![1.0, 1.0; 1.0, 2.0];
        assert!((distance_to_rowspan(&m, 0).unwrap() - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        let r = dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0; 1.0, 2.0, 3.0];
        assert!(distance_to_rowspan(&r, 0).unwrap() < 1e-12);
        assert!(distance_to_rowspan(&r, 2).unwrap() < 1e-12);
    }

    #[test]
    fn dot2_survives_cancellation() {
        assert_eq!(dot2([(1e16, 1.0), (1.0, 1.0), (-1e16, 1.0)]), 1.0);
        let a = 1.0 + f64::EPSILON;
        // a^2 - 1 - 2 eps = eps^2, lost entirely in plain arithmetic
        assert_eq!(dot2([(a, a), (-1.0, 1.0), (-2.0 * f64::EPSILON, 1.0)]), f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn refined_solve_on_nearly_singular_matrix() {
        let d = 2f64.powi(-40);
        let a = dmatrix![1.0, 1.0; 1.0, 1.0 + d];
        let y = solve_checked(&a, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let want = [2f64.powi(40) + 1.0, -(2f64.powi(40))];
        for k in 0..2 {
            assert!((y[k] - want[k]).abs() <= 4.0 * f64::EPSILON * want[k].abs(), "{y}");
        }
    }

    #[test]
    fn rowspan_normal_matches_svd_projection() {
        let m = dmatrix![2.0, -1.0, 0.5; 0.3, 1.0, 4.0; -1.0, 2.0, 1.0];
        let others = m.clone().remove_row(1).transpose();
        let q = others.qr().q();
        let row = m.row(1).transpose();
        let want = (&row - &q * (q.transpose() * &row)).norm();
        assert!((distance_to_rowspan(&m, 1).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn identity_on_two_by_two() {
        let m = dmatrix![1.0, 1.0; 1.0, 2.0];
        let q = quadratic_distance_identity(&m, 0).unwrap();
        let want = 1.0 / 5f64.sqrt();
        assert!((q.formula - want).abs() < 1e-15);
        assert!((q.direct - want).abs() < 1e-14);
    }

    #[test]
    fn identity_on_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -2.0, 5.0]));
        let q = quadratic_distance_identity(&m, 0).unwrap();
        assert!((q.formula - 3.0).abs() < 1e-15);
        assert!((q.direct - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_minor_is_named() {
        let m = dmatrix![1.0, 1.0, 1.0; 1.0, 1.0, 1.0; 1.0, 1.0, 1.0];
        match quadratic_distance_identity(&m, 0) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("minor")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_is_round_trip_exact() {
        let s = sample_symmetric(4, EntryLaw::standard_gaussian(), 5).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<f64> = text.lines().flat_map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap())).collect();
        let want: Vec<f64> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| s.entries[(i, j)]).collect();
        assert_eq!(parsed, want);
    }

    #[test]
    fn border_round_trip() {
        let s = sample_symmetric(5, EntryLaw::standard_gaussian(), 1).unwrap();
        let (minor, x, c) = border_split(&s.entries, 0);
        assert_eq!(border_matrix(&minor, &x, c), s.entries);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn samples_are_symmetric(n in 1usize..24, seed in any::<u64>(), law_ix in 0usize..5) {
            let law = [
                EntryLaw::Rademacher,
                EntryLaw::standard_gaussian(),
                EntryLaw::SignedBernoulli { p: 0.3 },
                EntryLaw::Uniform { a: -1.0, b: 1.0 },
                EntryLaw::PerturbedRademacher { sigma: 1e-6 },
            ][law_ix];
            let s = sample_symmetric(n, law, seed).unwrap();
            prop_assert!(is_symmetric(&s.entries));
        }

        #[test]
        fn inverse_norm_duality(n in 2usize..64, seed in any::<u64>()) {
            let s = sample_symmetric(n, EntryLaw::standard_gaussian(), seed).unwrap();
            let r = singular_extremes(&s.entries).unwrap();
            prop_assume!(r.s_min > 1e-6);
            let inv = s.entries.clone().try_inverse().unwrap();
            let ri = singular_extremes(&inv).unwrap();
            prop_assert!((r.s_min * ri.s_max - 1.0).abs() < 1e-8);
        }

        #[test]
        fn distance_bounded_by_row_norm(n in 1usize..20, seed in any::<u64>(), i in 0usize..20) {
            let s = sample_symmetric(n, EntryLaw::Rademacher, seed).unwrap();
            let i = i % n;
            let d = distance_to_rowspan(&s.entries, i).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(d <= s.entries.row(i).norm() * (1.0 + 1e-12));
        }
    }
}
