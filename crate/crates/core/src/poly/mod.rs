//! Sparse multivariate polynomials with real coefficients.
//!
//! [`MultiPoly`] is the common carrier for query boundaries, packed
//! lower-bound polynomials and every derived object (partials, restrictions,
//! resultants). Axes are zero-based throughout.

mod calculus;
mod det;
mod resultant;
mod univariate;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calculus::implicit_derivatives;
pub use det::{
    determinant, gen_vandermonde_det, monic_param_count, schur, schur_with_cap, tableau_count,
    vandermonde_det, Partition, DEFAULT_TABLEAU_CAP,
};
pub use resultant::{resultant, resultant_on_interval, sylvester_matrix, LocalResultant};
pub use univariate::{max_sublevel_interval, real_roots_in, real_roots_loose, SUBLEVEL_GRID_CELLS};

/// Default tolerance for treating a value as zero.
pub const ZERO_TOL: f64 = 1e-9;
/// Default tolerance for root refinement.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {axis} out of range for a {dim}-variate polynomial")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("point is not on the zero set (|P| = {residual:e})")]
    NotOnCurve { residual: f64 },
    #[error("y-partial vanishes at the point (|P_y| = {value:e}); singular or vertical tangent")]
    VanishingPartial { value: f64 },
    #[error("tableau enumeration exceeded the budget of {cap} tableaux")]
    EnumerationBudget { cap: u64 },
    #[error("partition has {parts} nonzero parts but only {vars} variables")]
    PartitionTooLong { parts: usize, vars: usize },
    #[error("parts must be weakly decreasing")]
    NotAPartition,
    #[error("expected a polynomial of dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("polynomial is constant")]
    Constant,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Exponent tuple `i = (i_1, ..., i_D)` of a monomial `X^i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        assert!(!exponents.is_empty(), "a multi-index needs at least one variable");
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex::new(vec![0; dim])
    }

    /// The index of the single variable `X_axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex::new(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Total degree `σ(i)`.
    pub fn sigma(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Exponent of axis `j`.
    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// The first `j` components.
    pub fn prefix(&self, j: usize) -> MultiIndex {
        MultiIndex::new(self.0[..j].to_vec())
    }

    /// Appends one more exponent (`t ⊕ v`).
    pub fn append(&self, v: u32) -> MultiIndex {
        let mut e = self.0.clone();
        e.push(v);
        MultiIndex(e)
    }

    fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(e: &[u32]) -> Self {
        MultiIndex::new(e.to_vec())
    }
}

/// A sparse polynomial `P(X) = Σ A_i X^i` over `dim` variables.
///
/// Stored coefficients are never zero and the cached degree is always the
/// largest `σ(i)` among them (0 for the zero polynomial).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
    degree: u32,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl From<MultiPoly> for PolyRepr {
    fn from(p: MultiPoly) -> Self {
        PolyRepr {
            dim: p.dim,
            terms: p.terms.into_iter().map(|(k, c)| (k.0, c)).collect(),
        }
    }
}

impl TryFrom<PolyRepr> for MultiPoly {
    type Error = PolyError;

    fn try_from(r: PolyRepr) -> Result<Self, PolyError> {
        if r.dim == 0 {
            return Err(PolyError::InvalidArgument("dim must be at least 1".into()));
        }
        for (e, c) in &r.terms {
            if e.len() != r.dim {
                return Err(PolyError::DimensionMismatch { expected: r.dim, got: e.len() });
            }
            if !c.is_finite() {
                return Err(PolyError::InvalidArgument("non-finite coefficient".into()));
            }
        }
        Ok(MultiPoly::from_terms(r.dim, r.terms.iter().map(|(e, c)| (e.as_slice(), *c))))
    }
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "polynomials need at least one variable");
        MultiPoly { dim, terms: BTreeMap::new(), degree: 0 }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = MultiPoly::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    /// The coordinate polynomial `X_axis`.
    pub fn var(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
        let mut p = MultiPoly::zero(dim);
        p.add_term(MultiIndex::unit(dim, axis), 1.0);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<'a, I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (&'a [u32], f64)>,
    {
        let mut p = MultiPoly::zero(dim);
        for (e, c) in terms {
            assert_eq!(e.len(), dim, "exponent tuple has the wrong length");
            p.add_term(MultiIndex::from(e), c);
        }
        p
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let mut p = MultiPoly::zero(1);
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::new(vec![k as u32]), c);
        }
        p
    }

    /// Bivariate polynomial from `(a, b, c)` triples meaning `c·x^a·y^b`.
    pub fn bivariate(terms: &[(u32, u32, f64)]) -> Self {
        let mut p = MultiPoly::zero(2);
        for &(a, b, c) in terms {
            p.add_term(MultiIndex::new(vec![a, b]), c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.degree == 0
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(&MultiIndex::from(exponents)).copied().unwrap_or(0.0)
    }

    /// Largest exponent of `axis` among the stored terms.
    pub fn degree_in(&self, axis: usize) -> u32 {
        self.terms.keys().map(|k| k.get(axis)).max().unwrap_or(0)
    }

    /// Sum of absolute coefficients, a cheap scale for relative tolerances.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Adds `c·X^e` in place, dropping the term if it cancels to zero.
    pub fn add_term(&mut self, e: MultiIndex, c: f64) {
        assert_eq!(e.dim(), self.dim, "exponent tuple has the wrong length");
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(e.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
        self.refresh_degree();
    }

    fn refresh_degree(&mut self) {
        self.degree = self.terms.keys().map(MultiIndex::sigma).max().unwrap_or(0);
    }

    /// Drops coefficients whose magnitude is at most `tol`.
    pub fn pruned(&self, tol: f64) -> MultiPoly {
        let mut p = MultiPoly::zero(self.dim);
        p.terms = self.terms.iter().filter(|(_, c)| c.abs() > tol).map(|(k, &c)| (k.clone(), c)).collect();
        p.refresh_degree();
        p
    }

    pub fn scale(&self, s: f64) -> MultiPoly {
        let mut p = MultiPoly::zero(self.dim);
        if s != 0.0 {
            p.terms = self.terms.iter().map(|(k, &c)| (k.clone(), c * s)).filter(|(_, c)| *c != 0.0).collect();
        }
        p.refresh_degree();
        p
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::constant(self.dim, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluates at `x`; panics if `x.len() != self.dim()`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "evaluation point has the wrong dimension");
        let mut s = 0.0;
        for (k, &c) in &self.terms {
            let mut m = c;
            for (xi, &e) in x.iter().zip(k.exponents()) {
                if e > 0 {
                    m *= xi.powi(e as i32);
                }
            }
            s += m;
        }
        s
    }

    /// Checked evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.eval(x))
    }

    /// Ascending coefficient vector of a univariate polynomial.
    pub fn univariate_coeffs(&self) -> Result<Vec<f64>, PolyError> {
        if self.dim != 1 {
            return Err(PolyError::WrongDimension { expected: 1, got: self.dim });
        }
        let mut c = vec![0.0; self.degree as usize + 1];
        for (k, &v) in &self.terms {
            c[k.get(0) as usize] = v;
        }
        Ok(c)
    }

    /// Dense evaluator for a bivariate polynomial.
    pub fn to_bivariate(&self) -> Bivariate {
        Bivariate::new(self)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = ["x", "y", "z"];
        let mut first = true;
        for (k, &c) in self.terms.iter().rev() {
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            let mono: Vec<String> = k
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    let v = if self.dim <= 3 { names[j].to_string() } else { format!("X{}", j + 1) };
                    if e == 1 { v } else { format!("{v}^{e}") }
                })
                .collect();
            if mono.is_empty() {
                write!(f, "{a}")?;
            } else if a == 1.0 {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{a}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in addition");
        let mut p = self.clone();
        for (k, &c) in &rhs.terms {
            p.add_term(k.clone(), c);
        }
        p
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in subtraction");
        let mut p = self.clone();
        for (k, &c) in &rhs.terms {
            p.add_term(k.clone(), -c);
        }
        p
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in multiplication");
        let mut terms: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (ka, &a) in &self.terms {
            for (kb, &b) in &rhs.terms {
                *terms.entry(ka.plus(kb)).or_insert(0.0) += a * b;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        let mut p = MultiPoly { dim: self.dim, terms, degree: 0 };
        p.refresh_degree();
        p
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Dense Horner evaluator for bivariate polynomials, used on hot paths.
#[derive(Clone, Debug)]
pub struct Bivariate {
    deg: usize,
    /// `c[a * (deg + 1) + b]` is the coefficient of `x^a y^b`.
    c: Vec<f64>,
}

impl Bivariate {
    pub fn new(p: &MultiPoly) -> Self {
        assert_eq!(p.dim(), 2, "dense evaluator needs a bivariate polynomial");
        let deg = p.degree() as usize;
        let mut c = vec![0.0; (deg + 1) * (deg + 1)];
        for (k, v) in p.terms() {
            c[k.get(0) as usize * (deg + 1) + k.get(1) as usize] = v;
        }
        Bivariate { deg, c }
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let w = self.deg + 1;
        let mut acc = 0.0;
        for a in (0..w).rev() {
            let row = &self.c[a * w..(a + 1) * w];
            let mut r = 0.0;
            for b in (0..w - a).rev() {
                r = r * y + row[b];
            }
            acc = acc * x + r;
        }
        acc
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }

    /// Coefficient of `x^a y^b`.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.deg {
            return 0.0;
        }
        self.c[a * (self.deg + 1) + b]
    }

    /// The same polynomial re-expanded around `(cx, cy)`.
    pub fn taylor(&self, cx: f64, cy: f64) -> Bivariate {
        let w = self.deg + 1;
        let mut c = self.c.clone();
        if self.deg > 0 {
            for b in 0..w {
                for i in 0..self.deg {
                    for j in (i..self.deg).rev() {
                        c[j * w + b] += cx * c[(j + 1) * w + b];
                    }
                }
            }
            for a in 0..w {
                let row = &mut c[a * w..(a + 1) * w];
                for i in 0..self.deg {
                    for j in (i..self.deg).rev() {
                        row[j] += cy * row[j + 1];
                    }
                }
            }
        }
        Bivariate { deg: self.deg, c }
    }

    /// `P(cx, cy)` together with a bound on `|P(cx + u, cy + v) − P(cx, cy)|`
    /// over `|u| ≤ hx`, `|v| ≤ hy`.
    pub fn value_and_variation(&self, cx: f64, cy: f64, hx: f64, hy: f64) -> (f64, f64) {
        let t = self.taylor(cx, cy);
        let w = self.deg + 1;
        let mut var = 0.0;
        let mut pa = 1.0;
        for a in 0..w {
            let mut pb = 1.0;
            for b in 0..w - a {
                if a + b > 0 {
                    var += t.c[a * w + b].abs() * pa * pb;
                }
                pb *= hy;
            }
            pa *= hx;
        }
        (t.c[0], var)
    }
}
