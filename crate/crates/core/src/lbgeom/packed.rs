use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::LbError;
use crate::poly::{MultiIndex, MultiPoly};

/// Packed coefficients lie in `[0, C_EPS·ε]`.
pub const C_EPS: f64 = 2.0;

/// Upper end of the root bracket for low degrees. Higher degrees need
/// `2^{Δ+1}` since the unperturbed root above `p` is `p_2^Δ`.
pub const DEFAULT_BRACKET_HI: f64 = 10.0;

/// Exponents with `σ(i) ≤ Δ`, minus the fixed `X_2^Δ`, in graded order.
/// Index `0` is the constant term.
pub fn index_set(dim: usize, degree: u32) -> Vec<MultiIndex> {
    fn rec(prefix: &mut Vec<u32>, dim: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(prefix, dim, left - e, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    rec(&mut Vec::new(), dim, degree, &mut all);
    let mut fixed = vec![0; dim];
    fixed[1] = degree;
    all.retain(|e| *e != fixed);
    all.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then_with(|| b.cmp(a)));
    all.into_iter().map(MultiIndex::new).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct GridSteps {
    xi: f64,
    k: Vec<i64>,
}

/// `X_1 − X_2^Δ + Σ A_i X^i − offset` with every `A_i ∈ [0, C_EPS·ε]`.
/// The `X_1` coefficient is `1 + A_{e_1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackedPoly {
    dim: usize,
    degree: u32,
    epsilon: f64,
    indices: Vec<MultiIndex>,
    coeffs: Vec<f64>,
    offset: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<GridSteps>,
}

impl PackedPoly {
    pub fn new(dim: usize, degree: u32, coeffs: Vec<f64>, epsilon: f64) -> Result<Self, LbError> {
        if dim < 2 || degree < 1 {
            return Err(LbError::NotPacked(format!("need D ≥ 2 and Δ ≥ 1, got D = {dim}, Δ = {degree}")));
        }
        let indices = index_set(dim, degree);
        if coeffs.len() != indices.len() {
            return Err(LbError::NotPacked(format!("expected {} coefficients, got {}", indices.len(), coeffs.len())));
        }
        let cap = C_EPS * epsilon;
        if let Some((i, &a)) = coeffs.iter().enumerate().find(|(_, a)| !(**a >= 0.0 && **a <= cap)) {
            return Err(LbError::NotPacked(format!(
                "coefficient of {:?} is {a}, outside [0, {cap}]",
                indices[i].exponents()
            )));
        }
        Ok(PackedPoly { dim, degree, epsilon, indices, coeffs, offset: 0.0, steps: None })
    }

    /// `X_1 − X_2^Δ`.
    pub fn pure(dim: usize, degree: u32) -> Result<Self, LbError> {
        let n = index_set(dim.max(2), degree.max(1)).len();
        PackedPoly::new(dim, degree, vec![0.0; n], 0.0)
    }

    fn from_steps(dim: usize, degree: u32, epsilon: f64, xi: f64, k: Vec<i64>) -> Result<Self, LbError> {
        let coeffs = k.iter().map(|&s| s as f64 * xi).collect();
        let mut p = PackedPoly::new(dim, degree, coeffs, epsilon)?;
        p.steps = Some(GridSteps { xi, k });
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// The same polynomial minus `r`; `(P, 0, r)` slabs are bounded by `P`
    /// and `P.shifted(r)`.
    pub fn shifted(&self, r: f64) -> PackedPoly {
        let mut p = self.clone();
        p.offset += r;
        p
    }

    /// Adds `c·X^e` for each listed term; the result must still be packed.
    pub fn perturbed(&self, terms: &[(Vec<u32>, f64)]) -> Result<PackedPoly, LbError> {
        let mut coeffs = self.coeffs.clone();
        for (e, c) in terms {
            let i = self
                .indices
                .iter()
                .position(|m| m.exponents() == e.as_slice())
                .ok_or_else(|| LbError::NotPacked(format!("{e:?} is not a free exponent")))?;
            coeffs[i] += c;
        }
        let mut p = PackedPoly::new(self.dim, self.degree, coeffs, self.epsilon)?;
        p.offset = self.offset;
        Ok(p)
    }

    pub fn to_multipoly(&self) -> MultiPoly {
        let mut p = &MultiPoly::var(self.dim, 0) - &MultiPoly::var(self.dim, 1).pow(self.degree);
        for (e, &a) in self.indices.iter().zip(&self.coeffs) {
            p.add_term(e.clone(), a);
        }
        p.add_term(MultiIndex::zero(self.dim), -self.offset);
        p.pruned(0.0)
    }

    /// Ascending coefficients of `x ↦ P(x, p)` for a base point
    /// `p ∈ R^{D−1}`.
    pub fn x1_coeffs(&self, p: &[f64]) -> Vec<f64> {
        debug_assert_eq!(p.len() + 1, self.dim);
        let mut c = vec![0.0; self.degree as usize + 1];
        c[0] = -p[0].powi(self.degree as i32) - self.offset;
        c[1] = 1.0;
        for (e, &a) in self.indices.iter().zip(&self.coeffs) {
            if a == 0.0 {
                continue;
            }
            let ex = e.exponents();
            let mono: f64 = ex[1..].iter().zip(p).map(|(&k, &v)| v.powi(k as i32)).product();
            c[ex[0] as usize] += a * mono;
        }
        c
    }

    /// Root bracket `[0, hi]` that holds every root over `[1, 2]^{D−1}`.
    pub fn default_bracket(&self) -> f64 {
        DEFAULT_BRACKET_HI.max((self.degree as f64 + 1.0).exp2() + self.offset.max(0.0))
    }

    /// Every nonzero coefficient of `self − other` has magnitude at least
    /// `xi`. Grid samples with the same step compare exactly.
    pub fn is_distant(&self, other: &PackedPoly, xi: f64) -> bool {
        if self.indices != other.indices {
            return false;
        }
        if let (Some(a), Some(b)) = (&self.steps, &other.steps) {
            if a.xi == b.xi && a.xi >= xi && self.offset == other.offset {
                return true;
            }
        }
        let close = |d: f64| d != 0.0 && d.abs() < xi * (1.0 - 1e-12);
        let mut diffs: Vec<f64> = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        diffs[0] -= self.offset - other.offset;
        !diffs.into_iter().any(close)
    }
}

fn horner(c: &[f64], x: f64) -> (f64, f64) {
    let (mut v, mut d) = (0.0, 0.0);
    for &a in c.iter().rev() {
        d = d * x + v;
        v = v * x + a;
    }
    (v, d)
}

/// The positive root of `x ↦ P(x, p)` in `[0, hi]`, by Newton steps kept
/// inside a shrinking bisection bracket.
pub fn axis_root(poly: &PackedPoly, p: &[f64], hi: f64) -> Result<f64, LbError> {
    if p.len() + 1 != poly.dim {
        return Err(LbError::InvalidParams(format!("base point needs {} coordinates", poly.dim - 1)));
    }
    let c = poly.x1_coeffs(p);
    let outside = || LbError::RootOutsideBracket { p: p.to_vec(), lo: 0.0, hi };
    if c[0] > 0.0 || horner(&c, hi).0 < 0.0 {
        return Err(outside());
    }
    if c[0] == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut up) = (0.0, hi);
    let mut x = (-c[0] / c[1]).clamp(lo, up);
    for _ in 0..200 {
        let (v, d) = horner(&c, x);
        if v == 0.0 {
            return Ok(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            up = x;
        }
        let mut next = x - v / d;
        if !(next > lo && next < up) {
            next = 0.5 * (lo + up);
        }
        let tol = 1e-15 * x.abs().max(1.0);
        if (next - x).abs() <= tol || up - lo <= tol {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// `|a_1 − b_1|` for the roots of `P1` and `P2` above `p`.
pub fn axis_distance(p1: &PackedPoly, p2: &PackedPoly, p: &[f64]) -> Result<f64, LbError> {
    if p1.dim != p2.dim {
        return Err(LbError::InvalidParams("polynomials live in different dimensions".into()));
    }
    let hi = p1.default_bracket().max(p2.default_bracket());
    Ok((axis_root(p1, p, hi)? - axis_root(p2, p, hi)?).abs())
}

/// `count` packed polynomials whose coefficients are drawn from the grid
/// `kξ`, `⌊ε/(2ξ)⌋ ≤ k ≤ ⌊ε/ξ⌋`. Each sample is checked to be distant from
/// every earlier one before it is emitted.
pub fn packed_family_sample(
    dim: usize,
    degree: u32,
    epsilon: f64,
    xi: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<PackedPoly>, LbError> {
    if !(xi > 0.0) || !(epsilon > 0.0) {
        return Err(LbError::InvalidParams(format!("need ε, ξ > 0, got ε = {epsilon}, ξ = {xi}")));
    }
    let ratio = epsilon / (2.0 * xi);
    let (k_lo, k_hi) = (ratio.floor(), (epsilon / xi).floor());
    if k_lo < 1.0 || k_hi > i64::MAX as f64 / 2.0 {
        return Err(LbError::EmptyGrid { ratio });
    }
    let (k_lo, k_hi) = (k_lo as i64, k_hi as i64);
    let len = index_set(dim.max(2), degree.max(1)).len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<PackedPoly> = Vec::with_capacity(count);
    for _ in 0..count {
        let k: Vec<i64> = (0..len).map(|_| rng.gen_range(k_lo..=k_hi)).collect();
        let p = PackedPoly::from_steps(dim, degree, epsilon, xi, k)?;
        if let Some(j) = out.iter().position(|q| !q.is_distant(&p, xi)) {
            return Err(LbError::Precondition(format!("sample {} is not distant from sample {j}", out.len())));
        }
        out.push(p);
    }
    Ok(out)
}
