//! Sylvester resultants of bivariate polynomials.

use super::det::determinant;
use super::{MultiPoly, PolyError};

/// Sylvester matrix of two univariate polynomials given by ascending
/// coefficients. Formal degrees are `p.len() - 1` and `q.len() - 1`.
pub fn sylvester_matrix(p: &[f64], q: &[f64]) -> (Vec<f64>, usize) {
    let m = p.len() - 1;
    let n = q.len() - 1;
    let size = m + n;
    let mut s = vec![0.0; size * size];
    for r in 0..n {
        for (k, &c) in p.iter().rev().enumerate() {
            s[r * size + r + k] = c;
        }
    }
    for r in 0..m {
        for (k, &c) in q.iter().rev().enumerate() {
            s[(n + r) * size + r + k] = c;
        }
    }
    (s, size)
}

fn coefficient_polys(p: &MultiPoly, eliminate: usize) -> Vec<MultiPoly> {
    let deg = p.degree_in(eliminate) as usize;
    let other = 1 - eliminate;
    let mut out = vec![MultiPoly::zero(1); deg + 1];
    for (k, c) in p.terms() {
        out[k.get(eliminate) as usize].add_term(super::MultiIndex::new(vec![k.get(other)]), c);
    }
    out
}

/// The resultant as a polynomial in a local variable `s ∈ [−1, 1]` where
/// the surviving coordinate is `mid + half·s`.
#[derive(Clone, Debug)]
pub struct LocalResultant {
    /// Ascending coefficients in `s`.
    pub coeffs: Vec<f64>,
    pub mid: f64,
    pub half: f64,
    /// True when every sampled determinant vanished relative to its
    /// Hadamard bound, i.e. the inputs share a factor.
    pub identically_zero: bool,
}

/// Resultant of bivariate `p` and `q` with respect to `eliminate`,
/// interpolated on Chebyshev nodes over the surviving coordinate range
/// `[lo, hi]`.
pub fn resultant_on_interval(
    p: &MultiPoly,
    q: &MultiPoly,
    eliminate: usize,
    lo: f64,
    hi: f64,
) -> Result<LocalResultant, PolyError> {
    for f in [p, q] {
        if f.dim() != 2 {
            return Err(PolyError::WrongDimension { expected: 2, got: f.dim() });
        }
    }
    if eliminate > 1 {
        return Err(PolyError::AxisOutOfRange { axis: eliminate, dim: 2 });
    }
    let other = 1 - eliminate;
    let pc = coefficient_polys(p, eliminate);
    let qc = coefficient_polys(q, eliminate);
    let m = pc.len() - 1;
    let n = qc.len() - 1;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if m + n == 0 {
        return Ok(LocalResultant { coeffs: vec![1.0], mid, half, identically_zero: false });
    }
    let deg = n * p.degree_in(other) as usize + m * q.degree_in(other) as usize;
    let nodes = deg + 1;
    let mut values = Vec::with_capacity(nodes);
    let mut all_small = true;
    for k in 0..nodes {
        let theta = std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
        let t = mid + half * theta.cos();
        let pv: Vec<f64> = pc.iter().map(|c| c.eval(&[t])).collect();
        let qv: Vec<f64> = qc.iter().map(|c| c.eval(&[t])).collect();
        let (s, size) = sylvester_matrix(&pv, &qv);
        let d = determinant(&s, size);
        let hadamard: f64 = (0..size)
            .map(|r| s[r * size..(r + 1) * size].iter().map(|v| v * v).sum::<f64>().sqrt())
            .product();
        if d.abs() > 1e-10 * hadamard {
            all_small = false;
        }
        values.push(d);
    }
    if all_small {
        return Ok(LocalResultant { coeffs: vec![0.0], mid, half, identically_zero: true });
    }
    // Chebyshev coefficients, then conversion to the monomial basis in s
    let mut cheb = vec![0.0; nodes];
    for (j, cj) in cheb.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, v) in values.iter().enumerate() {
            let theta = std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
            acc += v * (j as f64 * theta).cos();
        }
        *cj = 2.0 * acc / nodes as f64;
    }
    cheb[0] *= 0.5;
    let mut mono = vec![0.0; nodes];
    let mut t_prev = vec![0.0; nodes];
    let mut t_cur = vec![0.0; nodes];
    t_prev[0] = 1.0;
    if nodes > 1 {
        t_cur[1] = 1.0;
    }
    for (j, &cj) in cheb.iter().enumerate() {
        let tj = if j == 0 { &t_prev } else { &t_cur };
        for (mk, tk) in mono.iter_mut().zip(tj.iter()) {
            *mk += cj * tk;
        }
        if j >= 1 && j + 1 < nodes {
            let mut next = vec![0.0; nodes];
            for i in 0..nodes - 1 {
                next[i + 1] += 2.0 * t_cur[i];
            }
            for i in 0..nodes {
                next[i] -= t_prev[i];
            }
            t_prev = std::mem::replace(&mut t_cur, next);
        }
    }
    let scale = mono.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for v in mono.iter_mut() {
        if v.abs() <= 1e-13 * scale {
            *v = 0.0;
        }
    }
    Ok(LocalResultant { coeffs: mono, mid, half, identically_zero: false })
}

/// `Res_eliminate(p, q)` as a univariate polynomial in the other coordinate.
/// Shared factors give the zero polynomial.
pub fn resultant(p: &MultiPoly, q: &MultiPoly, eliminate: usize) -> Result<MultiPoly, PolyError> {
    let r = resultant_on_interval(p, q, eliminate, -1.0, 1.0)?;
    if r.identically_zero {
        return Ok(MultiPoly::zero(1));
    }
    Ok(MultiPoly::univariate(&r.coeffs))
}
