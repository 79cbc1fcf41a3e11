//! Univariate root finding and sublevel-set measurement.

use nalgebra::DMatrix;

use super::{MultiPoly, PolyError};

/// Grid resolution used by [`max_sublevel_interval`].
pub const SUBLEVEL_GRID_CELLS: usize = 1 << 20;

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn trim(c: &[f64]) -> &[f64] {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut end = c.len();
    while end > 0 && c[end - 1].abs() <= 1e-14 * scale {
        end -= 1;
    }
    &c[..end]
}

/// Real roots in `[lo, hi]` of the polynomial with ascending coefficients
/// `c`, found as companion-matrix eigenvalues and polished with Newton.
///
/// Roots of high multiplicity come back perturbed by roughly
/// `ε^{1/m}`; callers that need them exactly polish further.
pub fn real_roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    real_roots_loose(c, lo, hi, 1e-3)
}

/// [`real_roots_in`] with a caller-chosen tolerance on the imaginary part,
/// relative to `1 + |Re|`. Clusters from multiple roots need a loose one.
pub fn real_roots_loose(c: &[f64], lo: f64, hi: f64, im_tol: f64) -> Vec<f64> {
    let c = trim(c);
    if c.len() < 2 {
        return Vec::new();
    }
    // strip zero roots first so the companion matrix stays well scaled
    let zeros = c.iter().take_while(|v| **v == 0.0).count();
    let c = &c[zeros..];
    let mut roots = Vec::new();
    if zeros > 0 && lo <= 0.0 && 0.0 <= hi {
        roots.push(0.0);
    }
    let n = c.len() - 1;
    if n > 0 {
        let lead = c[n];
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -c[i] / lead;
        }
        let span = (hi - lo).abs().max(1.0);
        let deriv: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect();
        for z in m.complex_eigenvalues().iter() {
            if z.im.abs() > im_tol * (1.0 + z.re.abs()) {
                continue;
            }
            let mut x = z.re;
            for _ in 0..8 {
                let d = horner(&deriv, x);
                if d == 0.0 {
                    break;
                }
                let step = horner(c, x) / d;
                let nx = x - step;
                if !nx.is_finite() || horner(c, nx).abs() > horner(c, x).abs() {
                    break;
                }
                x = nx;
            }
            let tol = 1e-9 * span;
            if x >= lo - tol && x <= hi + tol {
                roots.push(x.clamp(lo, hi));
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Length of the longest interval `[x0, x0 + t] ⊆ domain` on which
/// `|P(x)| ≤ w`.
///
/// The domain is scanned on a grid of [`SUBLEVEL_GRID_CELLS`] cells; each
/// transition of `|P| − w` is then bisected to full precision, which
/// locates the roots of `P − w` and `P + w` that bound each run.
pub fn max_sublevel_interval(p: &MultiPoly, w: f64, domain: (f64, f64)) -> Result<f64, PolyError> {
    let c = p.univariate_coeffs()?;
    if p.is_constant() {
        return Err(PolyError::Constant);
    }
    if !(w > 0.0) {
        return Err(PolyError::InvalidArgument("w must be positive".into()));
    }
    let (a, b) = domain;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(PolyError::InvalidArgument("domain must be a finite interval with lo < hi".into()));
    }
    let inside = |x: f64| horner(&c, x).abs() <= w;
    let refine = |mut out_x: f64, mut in_x: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (out_x + in_x);
            if mid == out_x || mid == in_x {
                break;
            }
            if inside(mid) {
                in_x = mid;
            } else {
                out_x = mid;
            }
        }
        in_x
    };
    let n = SUBLEVEL_GRID_CELLS;
    let h = (b - a) / n as f64;
    let at = |i: usize| if i == n { b } else { a + h * i as f64 };
    let mut best = 0.0f64;
    let mut run_start: Option<f64> = None;
    let mut prev_in = false;
    for i in 0..=n {
        let x = at(i);
        let cur = inside(x);
        match (prev_in, cur) {
            (false, true) => {
                run_start = Some(if i == 0 { a } else { refine(at(i - 1), x) });
            }
            (true, false) => {
                let end = refine(x, at(i - 1));
                best = best.max(end - run_start.take().expect("run open"));
            }
            _ => {}
        }
        prev_in = cur;
    }
    if let Some(s) = run_start {
        best = best.max(b - s);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_simple_polynomials() {
        let r = real_roots_in(&[-1.0, 0.0, 1.0], -2.0, 2.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 1.0).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
        assert!(real_roots_in(&[1.0, 0.0, 1.0], -5.0, 5.0).is_empty());
        let r = real_roots_in(&[0.0, 0.0, -2.0, 1.0], -1.0, 3.0);
        assert_eq!(r, vec![0.0, 2.0]);
        assert!(real_roots_in(&[3.0], 0.0, 1.0).is_empty());
    }

    #[test]
    fn sublevel_examples() {
        let sq = MultiPoly::univariate(&[0.0, 0.0, 1.0]);
        let t = max_sublevel_interval(&sq, 0.01, (-1.0, 1.0)).unwrap();
        assert!((t - 0.2).abs() < 1e-12, "{t}");
        let lin = MultiPoly::univariate(&[0.0, 1.0]);
        let t = max_sublevel_interval(&lin, 0.5, (-1.0, 1.0)).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sublevel_empty_and_clipped() {
        let p = MultiPoly::univariate(&[5.0, 1.0]);
        assert_eq!(max_sublevel_interval(&p, 0.1, (0.0, 1.0)).unwrap(), 0.0);
        let small = MultiPoly::univariate(&[0.0, 1e-6]);
        assert_eq!(max_sublevel_interval(&small, 1.0, (-1.0, 1.0)).unwrap(), 2.0);
    }

    #[test]
    fn sublevel_picks_longest_run() {
        // x^2 - 1/4 is small near ±1/2; |P| ≤ 0.01 on two runs of equal length
        let p = MultiPoly::univariate(&[-0.25, 0.0, 1.0]);
        let t = max_sublevel_interval(&p, 0.01, (-1.0, 1.0)).unwrap();
        let expected = (0.26f64).sqrt() - (0.24f64).sqrt();
        assert!((t - expected).abs() < 1e-12);
    }

    #[test]
    fn sublevel_rejects_bad_input() {
        assert_eq!(max_sublevel_interval(&MultiPoly::univariate(&[1.0]), 0.1, (0.0, 1.0)), Err(PolyError::Constant));
        let p = MultiPoly::univariate(&[0.0, 1.0]);
        assert!(max_sublevel_interval(&p, 0.0, (0.0, 1.0)).is_err());
        assert!(max_sublevel_interval(&MultiPoly::var(2, 0), 0.1, (0.0, 1.0)).is_err());
    }
}
