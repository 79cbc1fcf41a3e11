//! Common zeros of bivariate systems by resultant elimination.

use super::{dist, CurveError, Rect};
use crate::poly::{real_roots_loose, resultant_on_interval, Bivariate, MultiPoly};

/// Zeros closer than this are reported once.
pub const DEDUP_DIST: f64 = 1e-6;

const ACCEPT: f64 = 1e-9;

struct Equation {
    f: Bivariate,
    fx: Bivariate,
    fy: Bivariate,
}

impl Equation {
    fn new(p: &MultiPoly) -> Self {
        Equation { f: p.to_bivariate(), fx: p.d(0).to_bivariate(), fy: p.d(1).to_bivariate() }
    }
}

fn residual(eqs: &[Equation], p: [f64; 2]) -> f64 {
    eqs.iter().map(|e| e.f.eval(p[0], p[1]).powi(2)).sum::<f64>().sqrt()
}

/// Levenberg–Marquardt on the (possibly overdetermined) system.
fn polish(eqs: &[Equation], start: [f64; 2]) -> [f64; 2] {
    let mut x = start;
    let mut r = residual(eqs, x);
    let mut lambda = 1e-6;
    for _ in 0..200 {
        if r == 0.0 {
            break;
        }
        let (mut a, mut b, mut c, mut g0, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for e in eqs {
            let v = e.f.eval(x[0], x[1]);
            let jx = e.fx.eval(x[0], x[1]);
            let jy = e.fy.eval(x[0], x[1]);
            a += jx * jx;
            b += jx * jy;
            c += jy * jy;
            g0 += jx * v;
            g1 += jy * v;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (aa, cc) = (a + lambda * (a + 1e-300), c + lambda * (c + 1e-300));
            let det = aa * cc - b * b;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let dx = (cc * g0 - b * g1) / det;
            let dy = (aa * g1 - b * g0) / det;
            let cand = [x[0] - dx, x[1] - dy];
            let rc = residual(eqs, cand);
            if rc < r {
                let moved = dx.hypot(dy);
                x = cand;
                r = rc;
                lambda = (lambda / 3.0).max(1e-12);
                improved = moved > 1e-17 * (1.0 + x[0].abs() + x[1].abs());
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    x
}

/// Seed points for `P = Q = 0` in `bx`: roots of each resultant, lifted
/// through the roots of the restricted polynomials.
fn seeds(p: &MultiPoly, q: &MultiPoly, bx: &Rect) -> Result<Vec<[f64; 2]>, CurveError> {
    let mut out = Vec::new();
    let range = |axis: usize| if axis == 0 { (bx.x0, bx.x1) } else { (bx.y0, bx.y1) };
    let mut eliminated = false;
    for elim in 0..2 {
        if p.degree_in(elim) == 0 && q.degree_in(elim) == 0 {
            continue;
        }
        eliminated = true;
        let other = 1 - elim;
        let (lo, hi) = range(other);
        let pad = 1e-6 * (hi - lo).max(1e-300);
        let local = resultant_on_interval(p, q, elim, lo - pad, hi + pad)?;
        if local.identically_zero {
            return Err(CurveError::SharedFactor);
        }
        let (elo, ehi) = range(elim);
        let epad = 1e-6 * (ehi - elo);
        for s in real_roots_loose(&local.coeffs, -1.0, 1.0, 1e-2) {
            let v = local.mid + local.half * s;
            for f in [p, q] {
                let u = f.restrict(other, v)?;
                let coeffs = u.univariate_coeffs()?;
                for root in real_roots_loose(&coeffs, elo - epad, ehi + epad, 1e-2) {
                    let mut pt = [0.0; 2];
                    pt[elim] = root;
                    pt[other] = v;
                    out.push(pt);
                }
            }
        }
    }
    if !eliminated && (p.is_zero() || q.is_zero()) {
        return Err(CurveError::SharedFactor);
    }
    Ok(out)
}

fn finish(eqs: &[Equation], seeds: Vec<[f64; 2]>, bx: &Rect) -> Vec<[f64; 2]> {
    let mut found: Vec<([f64; 2], f64)> = Vec::new();
    for s in seeds {
        let x = polish(eqs, s);
        if !bx.contains(x, ACCEPT) || eqs.iter().any(|e| e.f.eval(x[0], x[1]).abs() > ACCEPT) {
            continue;
        }
        let r = residual(eqs, x);
        match found.iter_mut().find(|(y, _)| dist(*y, x) < DEDUP_DIST) {
            Some(slot) if r < slot.1 => *slot = (x, r),
            Some(_) => {}
            None => found.push((x, r)),
        }
    }
    let mut pts: Vec<[f64; 2]> = found.into_iter().map(|(x, _)| x).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts
}

/// Points of `bx` where `P` and `Q` both vanish, to within `1e−9`.
pub fn common_zeros(p: &MultiPoly, q: &MultiPoly, bx: &Rect) -> Result<Vec<[f64; 2]>, CurveError> {
    if p.is_zero() || q.is_zero() {
        return Err(CurveError::SharedFactor);
    }
    let seeds = seeds(p, q, bx)?;
    Ok(finish(&[Equation::new(p), Equation::new(q)], seeds, bx))
}

/// Points of `bx` where `P`, `P_x` and `P_y` all vanish.
pub fn singular_points(p: &MultiPoly, bx: &Rect) -> Result<Vec<[f64; 2]>, CurveError> {
    if p.dim() != 2 {
        return Err(crate::poly::PolyError::WrongDimension { expected: 2, got: p.dim() }.into());
    }
    if p.is_zero() {
        return Err(CurveError::Degenerate);
    }
    let (px, py) = (p.d(0), p.d(1));
    let mut seeds_found = None;
    for partial in [&px, &py] {
        if partial.is_zero() {
            continue;
        }
        match seeds(p, partial, bx) {
            Ok(s) => {
                seeds_found = Some(s);
                break;
            }
            Err(CurveError::SharedFactor) => continue,
            Err(e) => return Err(e),
        }
    }
    let Some(seeds) = seeds_found else {
        return if p.is_constant() { Ok(Vec::new()) } else { Err(CurveError::SharedFactor) };
    };
    Ok(finish(&[Equation::new(p), Equation::new(&px), Equation::new(&py)], seeds, bx))
}

/// Number of points of `Z(P) ∩ bx` where the curve has slope `dy/dx =
/// slope`, i.e. common zeros of `P` and `P_x + slope·P_y`.
pub fn tangent_count_with_slope(p: &MultiPoly, bx: &Rect, slope: f64) -> Result<usize, CurveError> {
    let dir = &p.d(0) + &p.d(1).scale(slope);
    Ok(common_zeros(p, &dir.pruned(0.0), bx)?.len())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn wide() -> Rect {
        Rect::new(-2.0, -2.0, 2.0, 2.0)
    }

    #[test]
    fn node_and_cusp_are_singular() {
        let node = MultiPoly::bivariate(&[(2, 0, 1.0), (0, 2, -1.0)]);
        let s = singular_points(&node, &wide()).unwrap();
        assert_eq!(s.len(), 1);
        assert!(dist(s[0], [0.0, 0.0]) < 1e-9);

        let cusp = MultiPoly::bivariate(&[(0, 2, 1.0), (3, 0, -1.0)]);
        let s = singular_points(&cusp, &wide()).unwrap();
        assert_eq!(s.len(), 1);
        assert!(dist(s[0], [0.0, 0.0]) < 1e-4);
    }

    #[test]
    fn smooth_curves_have_no_singular_points() {
        let circle = MultiPoly::bivariate(&[(2, 0, 1.0), (0, 2, 1.0), (0, 0, -1.0)]);
        assert!(singular_points(&circle, &wide()).unwrap().is_empty());
        let line = MultiPoly::bivariate(&[(0, 1, 1.0), (0, 0, -0.5)]);
        assert!(singular_points(&line, &wide()).unwrap().is_empty());
    }

    pub(crate) fn nodal_cubic_at(x: f64, y: f64) -> MultiPoly {
        // u² − v² − u³ with u = x − x0, v = y − y0
        MultiPoly::bivariate(&[(2, 0, 1.0), (0, 2, -1.0), (3, 0, -1.0)]).shift(&[-x, -y])
    }

    #[test]
    fn shifted_node_inside_unit_square() {
        let p = nodal_cubic_at(0.3, 0.6);
        let s = singular_points(&p, &Rect::unit()).unwrap();
        assert_eq!(s.len(), 1);
        assert!(dist(s[0], [0.3, 0.6]) < 1e-9);
    }

    #[test]
    fn reducible_product_shares_a_factor_with_its_partials() {
        // (x − 0.3)(y − 0.6)
        let p = MultiPoly::bivariate(&[(1, 1, 1.0), (1, 0, -0.6), (0, 1, -0.3), (0, 0, 0.18)]);
        assert_eq!(singular_points(&p, &Rect::unit()), Err(CurveError::SharedFactor));
    }

    #[test]
    fn squared_factor_is_reported() {
        let l = MultiPoly::bivariate(&[(0, 1, 1.0), (1, 0, -1.0)]);
        let p = &l * &l;
        assert_eq!(singular_points(&p, &wide()), Err(CurveError::SharedFactor));
    }

    #[test]
    fn horizontal_tangents() {
        let circle = MultiPoly::bivariate(&[(2, 0, 1.0), (0, 2, 1.0), (0, 0, -1.0)]);
        assert_eq!(tangent_count_with_slope(&circle, &wide(), 0.0).unwrap(), 2);
        let parabola = MultiPoly::bivariate(&[(0, 1, 1.0), (2, 0, -1.0)]);
        assert_eq!(tangent_count_with_slope(&parabola, &wide(), 0.0).unwrap(), 1);
        // slope 1 on the unit circle: (−1/√2, 1/√2) and (1/√2, −1/√2)
        assert_eq!(tangent_count_with_slope(&circle, &wide(), 1.0).unwrap(), 2);
    }

    #[test]
    fn common_zeros_of_two_circles() {
        let a = MultiPoly::bivariate(&[(2, 0, 1.0), (0, 2, 1.0), (0, 0, -1.0)]);
        let b = MultiPoly::bivariate(&[(2, 0, 1.0), (1, 0, -2.0), (0, 2, 1.0)]);
        let z = common_zeros(&a, &b, &wide()).unwrap();
        assert_eq!(z.len(), 2);
        let h = 0.75f64.sqrt();
        assert!(dist(z[0], [0.5, -h]) < 1e-12 && dist(z[1], [0.5, h]) < 1e-12);
    }
}
