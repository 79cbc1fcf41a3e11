use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LbError;
use crate::poly::MultiPoly;

/// A measurable subset of the cube `[0, side]^D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Range {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Slab { poly: MultiPoly, a: f64, b: f64 },
}

impl Range {
    pub fn dim(&self) -> usize {
        match self {
            Range::Box { lo, .. } => lo.len(),
            Range::Slab { poly, .. } => poly.dim(),
        }
    }

    /// Exact volume of `self ∩ other ∩ [0, side]^D` when both are boxes.
    fn box_overlap(&self, other: &Range, side: f64) -> Option<f64> {
        match (self, other) {
            (Range::Box { lo: a0, hi: a1 }, Range::Box { lo: b0, hi: b1 }) => Some(
                (0..a0.len())
                    .map(|i| (a1[i].min(b1[i]).min(side) - a0[i].max(b0[i]).max(0.0)).max(0.0))
                    .product(),
            ),
            _ => None,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Range::Box { lo, hi } => p.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
            Range::Slab { poly, a, b } => {
                let v = poly.eval(p);
                *a <= v && v <= *b
            }
        }
    }
}

/// `per_axis` strips of the given width across each of the first two axes
/// of `[0, 1]^2`, evenly spaced.
pub fn axis_strip_family(per_axis: usize, width: f64) -> Vec<Range> {
    let mut out = Vec::with_capacity(2 * per_axis);
    for axis in 0..2 {
        for j in 0..per_axis {
            let c = (j as f64 + 0.5) / per_axis as f64;
            let (mut lo, mut hi) = (vec![0.0; 2], vec![1.0; 2]);
            lo[axis] = (c - 0.5 * width).max(0.0);
            hi[axis] = (c + 0.5 * width).min(1.0);
            out.push(Range::Box { lo, hi });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerandOptions {
    /// Pairwise intersections must hold fewer than `3k√log₂ n` points.
    pub k: u32,
    /// Declared exponent with `m = n^c`; `None` takes `log m / log n`.
    pub c: Option<f64>,
    /// Declared constant of the intersection bound `C·side^D/(n·2^{√log₂ n})`.
    pub intersection_const: f64,
    pub side: f64,
    /// Samples for the Monte Carlo precondition check.
    pub mc_samples: usize,
}

impl Default for DerandOptions {
    fn default() -> Self {
        DerandOptions { k: 1, c: None, intersection_const: 2.0, side: 1.0, mc_samples: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerandResult {
    pub n: usize,
    pub t: usize,
    pub trials: usize,
    pub ranges: usize,
    pub c: f64,
    /// Every range held at least `t` points.
    pub cond1: f64,
    /// Every pairwise intersection held fewer than `pair_threshold` points.
    pub cond2: f64,
    pub joint: f64,
    pub pair_threshold: f64,
    pub required_measure: f64,
    pub min_measure: f64,
    pub measures_ok: bool,
    pub intersection_bound: f64,
    pub max_intersection: f64,
    pub intersections_ok: bool,
}

fn membership(ranges: &[Range], pts: &[Vec<f64>]) -> Vec<Vec<u64>> {
    let words = pts.len().div_ceil(64);
    ranges
        .par_iter()
        .map(|r| {
            let mut bits = vec![0u64; words];
            for (i, p) in pts.iter().enumerate() {
                if r.contains(p) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            bits
        })
        .collect()
}

fn popcount(a: &[u64]) -> u64 {
    a.iter().map(|w| w.count_ones() as u64).sum()
}

fn and_count(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum()
}

fn cube_points(count: usize, dim: usize, side: f64, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| (0..dim).map(|_| side * rng.gen::<f64>()).collect()).collect()
}

/// Draws `n` uniform points `trials` times and records how often every
/// range is rich and every pairwise intersection is poor. The measure
/// preconditions are computed exactly for boxes and estimated on a
/// separate sample otherwise.
pub fn derand_simulation(
    ranges: &[Range],
    n: usize,
    t: usize,
    trials: usize,
    seed: u64,
    opts: &DerandOptions,
) -> Result<DerandResult, LbError> {
    if ranges.len() < 2 || n < 2 || trials == 0 || opts.k == 0 || !(opts.side > 0.0) {
        return Err(LbError::InvalidParams("need two ranges, n ≥ 2, k ≥ 1, a trial and a positive side".into()));
    }
    let dim = ranges[0].dim();
    if ranges.iter().any(|r| r.dim() != dim) {
        return Err(LbError::InvalidParams("ranges live in different dimensions".into()));
    }
    let nf = n as f64;
    let c = opts.c.unwrap_or((ranges.len() as f64).ln() / nf.ln());
    let vol = opts.side.powi(dim as i32);
    let required_measure = 4.0 * c * vol * t as f64 / nf;
    let intersection_bound = opts.intersection_const * vol / (nf * nf.log2().sqrt().exp2());
    let pair_threshold = 3.0 * opts.k as f64 * nf.log2().sqrt();

    let exact = ranges.iter().all(|r| matches!(r, Range::Box { .. }));
    let (min_measure, max_intersection) = if exact {
        let side = opts.side;
        let mut max_i: f64 = 0.0;
        for i in 0..ranges.len() {
            for j in 0..i {
                max_i = max_i.max(ranges[i].box_overlap(&ranges[j], side).unwrap_or(0.0));
            }
        }
        let min_m = ranges.iter().map(|r| r.box_overlap(r, side).unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
        (min_m, max_i)
    } else {
        let mc = cube_points(opts.mc_samples.max(1), dim, opts.side, seed, u64::MAX);
        let bits = membership(ranges, &mc);
        let scale = vol / mc.len() as f64;
        let min_m = bits.iter().map(|b| popcount(b) as f64 * scale).fold(f64::INFINITY, f64::min);
        let mut max_i: f64 = 0.0;
        for i in 0..bits.len() {
            for j in 0..i {
                max_i = max_i.max(and_count(&bits[i], &bits[j]) as f64 * scale);
            }
        }
        (min_m, max_i)
    };

    let outcomes: Vec<(bool, bool)> = (0..trials)
        .map(|trial| {
            let pts = cube_points(n, dim, opts.side, seed, trial as u64);
            let bits = membership(ranges, &pts);
            let rich = bits.iter().all(|b| popcount(b) >= t as u64);
            let poor = (0..bits.len()).all(|i| (0..i).all(|j| (and_count(&bits[i], &bits[j]) as f64) < pair_threshold));
            (rich, poor)
        })
        .collect();
    let frac = |f: &dyn Fn(&(bool, bool)) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / trials as f64;
    Ok(DerandResult {
        n,
        t,
        trials,
        ranges: ranges.len(),
        c,
        cond1: frac(&|o| o.0),
        cond2: frac(&|o| o.1),
        joint: frac(&|o| o.0 && o.1),
        pair_threshold,
        required_measure,
        min_measure,
        measures_ok: min_measure >= required_measure,
        intersection_bound,
        max_intersection,
        intersections_ok: max_intersection <= intersection_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_family_shape() {
        let f = axis_strip_family(4, 0.1);
        assert_eq!(f.len(), 8);
        assert!(f[0].contains(&[0.125, 0.9]) && !f[0].contains(&[0.3, 0.9]));
        assert!(f[4].contains(&[0.9, 0.125]) && !f[4].contains(&[0.9, 0.3]));
    }

    #[test]
    fn slab_ranges() {
        let r = Range::Slab { poly: MultiPoly::var(2, 1), a: 0.2, b: 0.4 };
        assert!(r.contains(&[0.9, 0.3]) && !r.contains(&[0.9, 0.5]));
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<Range>(&s).unwrap(), r);
    }

    #[test]
    fn wide_disjoint_strips_always_succeed() {
        let f = axis_strip_family(4, 0.2);
        let horizontal: Vec<Range> = f[..4].to_vec();
        let r = derand_simulation(&horizontal, 1000, 50, 10, 1, &DerandOptions { mc_samples: 10_000, ..Default::default() })
            .unwrap();
        assert_eq!((r.cond1, r.cond2, r.joint), (1.0, 1.0, 1.0));
        assert_eq!(r.max_intersection, 0.0);
    }

    #[test]
    fn thin_strips_fail_the_richness_condition() {
        let f = axis_strip_family(8, 1e-4);
        let r = derand_simulation(&f, 1000, 5, 5, 2, &DerandOptions { mc_samples: 1000, ..Default::default() }).unwrap();
        assert_eq!(r.cond1, 0.0);
        assert!(!r.measures_ok);
        assert!((r.min_measure - 1e-4).abs() < 1e-15);
        assert!((r.max_intersection - 1e-8).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_path_for_slabs() {
        let y = MultiPoly::var(2, 1);
        let x = MultiPoly::var(2, 0);
        let f = vec![Range::Slab { poly: y, a: 0.0, b: 0.1 }, Range::Slab { poly: x, a: 0.0, b: 0.1 }];
        let r = derand_simulation(&f, 200, 1, 2, 3, &DerandOptions { mc_samples: 100_000, ..Default::default() }).unwrap();
        assert!((r.min_measure - 0.1).abs() < 0.005, "{r:?}");
        assert!((r.max_intersection - 0.01).abs() < 0.002, "{r:?}");
    }

    #[test]
    fn deterministic_under_seed() {
        let f = axis_strip_family(8, 0.05);
        let o = DerandOptions { mc_samples: 5000, ..Default::default() };
        assert_eq!(derand_simulation(&f, 500, 10, 4, 9, &o).unwrap(), derand_simulation(&f, 500, 10, 4, 9, &o).unwrap());
    }
}
