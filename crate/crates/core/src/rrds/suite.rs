//! Random inputs for tests and benchmarks: uniform points and a mixed
//! family of query ranges.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{QueryRange, Sign};
use crate::poly::MultiPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Disk,
    Ellipse,
    /// Above or below `y = Σ_{i≤3} a_i x^i`.
    Cubic,
    /// `0 ≤ y − Σ_{i≤4} b_i x^i ≤ w`.
    QuarticSlab,
}

pub const ALL_KINDS: [QueryKind; 4] = [QueryKind::Disk, QueryKind::Ellipse, QueryKind::Cubic, QueryKind::QuarticSlab];

pub fn uniform_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
}

/// `y − Σ c_i x^i`.
fn graph(coeffs: &[f64]) -> MultiPoly {
    let mut p = MultiPoly::var(2, 1);
    for (i, &c) in coeffs.iter().enumerate() {
        p = &p - &MultiPoly::bivariate(&[(i as u32, 0, c)]);
    }
    p
}

pub fn random_query<R: Rng>(kind: QueryKind, rng: &mut R) -> QueryRange {
    match kind {
        QueryKind::Disk => {
            let (cx, cy) = (rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85));
            let r: f64 = rng.gen_range(0.05..0.35);
            let p = MultiPoly::bivariate(&[
                (2, 0, 1.0),
                (1, 0, -2.0 * cx),
                (0, 2, 1.0),
                (0, 1, -2.0 * cy),
                (0, 0, cx * cx + cy * cy - r * r),
            ]);
            QueryRange::single(p, Sign::Le)
        }
        QueryKind::Ellipse => {
            let (cx, cy) = (rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85));
            let a: f64 = rng.gen_range(0.06..0.35);
            let b: f64 = rng.gen_range(0.06..0.35);
            let th: f64 = rng.gen_range(0.0..PI);
            let (s, c) = th.sin_cos();
            let dx = MultiPoly::bivariate(&[(1, 0, 1.0), (0, 0, -cx)]);
            let dy = MultiPoly::bivariate(&[(0, 1, 1.0), (0, 0, -cy)]);
            let u = &dx.scale(c) + &dy.scale(s);
            let v = &dy.scale(c) - &dx.scale(s);
            // b²u² + a²v² − a²b², the ellipse scaled by a²b²
            let p = &(&(&u * &u).scale(b * b) + &(&v * &v).scale(a * a)) - &MultiPoly::constant(2, a * a * b * b);
            QueryRange::single(p.pruned(0.0), Sign::Le)
        }
        QueryKind::Cubic => {
            let mut c = vec![rng.gen_range(0.2..0.8)];
            c.extend((0..3).map(|_| rng.gen_range(-0.5..0.5)));
            let sign = if rng.gen_bool(0.5) { Sign::Le } else { Sign::Ge };
            QueryRange::single(graph(&c), sign)
        }
        QueryKind::QuarticSlab => {
            let mut c = vec![rng.gen_range(0.1..0.7)];
            c.extend((0..4).map(|_| rng.gen_range(-0.4..0.4)));
            let w = rng.gen_range(0.02..0.2);
            QueryRange::slab(graph(&c), 0.0, w)
        }
    }
}

/// `count` queries cycling through every kind.
pub fn query_suite(count: usize, seed: u64) -> Vec<(QueryKind, QueryRange)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let kind = ALL_KINDS[i % ALL_KINDS.len()];
            (kind, random_query(kind, &mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_contains_its_center_and_not_far_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let r = random_query(QueryKind::Ellipse, &mut rng);
            let p = &r.factors[0].poly;
            assert_eq!(p.degree(), 2);
            // center is where the gradient vanishes; the constant term of
            // the shifted form is −a²b² < 0
            let (cx, cy) = {
                let (a, b, c) = (p.coefficient(&[2, 0]), p.coefficient(&[1, 1]), p.coefficient(&[0, 2]));
                let (d, e) = (p.coefficient(&[1, 0]), p.coefficient(&[0, 1]));
                let det = 4.0 * a * c - b * b;
                ((b * e - 2.0 * c * d) / det, (b * d - 2.0 * a * e) / det)
            };
            assert!(r.contains([cx, cy]));
            assert!(!r.contains([cx + 0.8, cy + 0.8]));
        }
    }

    #[test]
    fn suite_is_deterministic_and_mixed() {
        let a = query_suite(8, 4);
        let b = query_suite(8, 4);
        assert_eq!(a, b);
        assert_eq!(a[3].0, QueryKind::QuarticSlab);
        assert!(a[3].1.slab.is_some());
        assert!(a.iter().all(|(_, r)| r.validate(4).is_ok()));
    }

    #[test]
    fn graph_sign_convention() {
        let p = graph(&[0.5, 0.0, 1.0]);
        assert!(p.eval(&[0.0, 0.6]) > 0.0);
        assert!(p.eval(&[1.0, 1.4]) < 0.0);
    }
}
