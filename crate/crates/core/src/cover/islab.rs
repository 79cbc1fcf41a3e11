//! Polynomial-boundary slab hierarchy and Taylor covers.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::rotated::in_owner_cell;
use super::{strip_index, CatalogSummary, CoverError, CoverOptions};
use crate::curve::{Cell, Grid, SubCurve};
use crate::poly::{implicit_derivatives, MultiPoly};

/// Levels `1..=Δ−1` of polynomial slabs over a grid, for query curves whose
/// derivatives stay in `[−c, c]`.
///
/// A level-`i` family is fixed by a cell and guesses `α_1..α_i` for the
/// derivatives at the cell's left edge `x_l`; order `j` is guessed on the
/// lattice `−c + k·2c/q^{i−j+1}`. Its strips are
/// `{k·w ≤ y − T(x) < (k+1)·w}` with `T(x) = Σ α_j (x − x_l)^j / j!` and
/// `w = 1/q^{i+1}`, for every anchor `k` on the global lattice that can
/// meet the cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IslabHierarchy {
    grid: Grid,
    delta: u32,
    c: f64,
}

pub fn build_islab_hierarchy(grid: &Grid, delta: u32, c: f64) -> Result<IslabHierarchy, CoverError> {
    if delta < 2 {
        return Err(CoverError::InvalidArgument(format!("hierarchy needs Δ ≥ 2, got {delta}")));
    }
    if !(c >= 1.0) || !c.is_finite() {
        return Err(CoverError::InvalidArgument(format!("derivative bound must be ≥ 1, got {c}")));
    }
    let depth = (grid.q() as f64).powi(delta as i32);
    if depth > 1e15 {
        return Err(CoverError::InvalidArgument("q^Δ overflows the guess lattice".into()));
    }
    Ok(IslabHierarchy { grid: *grid, delta, c })
}

impl IslabHierarchy {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn max_level(&self) -> u32 {
        self.delta - 1
    }

    fn qpow(&self, e: u32) -> f64 {
        (self.grid.q() as f64).powi(e as i32)
    }

    /// Vertical width `1/q^{i+1}` of level-`i` slabs.
    pub fn width(&self, level: u32) -> f64 {
        1.0 / self.qpow(level + 1)
    }

    /// Spacing `2c/q^{i−j+1}` of order-`j` guesses at level `i`.
    pub fn guess_step(&self, level: u32, order: u32) -> f64 {
        2.0 * self.c / self.qpow(level - order + 1)
    }

    pub fn guess_count(&self, level: u32, order: u32) -> u64 {
        self.qpow(level - order + 1) as u64 + 1
    }

    pub fn guess_value(&self, level: u32, order: u32, k: u32) -> f64 {
        -self.c + k as f64 * self.guess_step(level, order)
    }

    /// Nearest guess index to `v`, ties to the smaller guess.
    pub fn snap(&self, level: u32, order: u32, v: f64) -> Result<u32, CoverError> {
        if !(v.abs() <= self.c) {
            return Err(CoverError::DerivativeOutOfRange { order: order as usize, value: v, bound: self.c });
        }
        let s = self.guess_step(level, order);
        let x = (v + self.c) / s;
        let k = (x - 0.5).ceil().max(0.0) as u64;
        Ok(k.min(self.guess_count(level, order) - 1) as u32)
    }

    /// `c·(e − 1)`, the most a level polynomial can move over one cell
    /// width, in units of `1/q`.
    fn reach(&self) -> f64 {
        self.c * (E - 1.0)
    }

    /// Anchor indices whose strips can meet row `row`.
    pub fn anchor_range(&self, row: u32, level: u32) -> (i64, i64) {
        let q = self.grid.q() as f64;
        let w = self.width(level);
        let lo = ((row as f64 / q - self.reach() / q) / w).floor() as i64;
        let hi = (((row + 1) as f64 / q + self.reach() / q) / w).ceil() as i64;
        (lo, hi)
    }

    pub fn families_per_cell(&self, level: u32) -> f64 {
        (1..=level).map(|j| self.guess_count(level, j) as f64).product()
    }

    pub fn family(&self, cell: Cell, guesses: &[u32]) -> Result<PolyFamily, CoverError> {
        let level = guesses.len() as u32;
        if level == 0 || level > self.max_level() {
            return Err(CoverError::OrderTooHigh { order: level as usize, max: self.max_level() as usize });
        }
        for (j, &k) in guesses.iter().enumerate() {
            if k as u64 >= self.guess_count(level, j as u32 + 1) {
                return Err(CoverError::InvalidArgument(format!("guess {k} out of range for order {}", j + 1)));
            }
        }
        let alphas = guesses.iter().enumerate().map(|(j, &k)| self.guess_value(level, j as u32 + 1, k)).collect();
        let (k_min, k_max) = self.anchor_range(cell.row, level);
        Ok(PolyFamily {
            grid: self.grid,
            cell,
            level,
            guesses: guesses.to_vec(),
            alphas,
            x_l: self.grid.line(cell.col),
            width: self.width(level),
            k_min,
            k_max,
        })
    }

    /// Slab counts per level over all cells.
    pub fn summary(&self) -> CatalogSummary {
        let q = self.grid.q();
        let levels: Vec<u32> = (1..=self.max_level()).collect();
        let counts: Vec<f64> = levels
            .iter()
            .map(|&i| {
                let anchors: f64 = (0..q)
                    .map(|r| {
                        let (lo, hi) = self.anchor_range(r, i);
                        (hi - lo + 1) as f64
                    })
                    .sum();
                q as f64 * anchors * self.families_per_cell(i)
            })
            .collect();
        CatalogSummary { q, levels, total: counts.iter().sum(), counts_per_level: counts }
    }

    /// The level-`(i−1)` slab a level-`i` slab hangs under: each guess is
    /// rounded to the coarser lattice and the anchor point `(x_l, k·w)` picks
    /// the strip.
    pub fn parent(&self, slab: &PolySlab) -> Option<PolySlab> {
        let f = &slab.family;
        if f.level <= 1 {
            return None;
        }
        let q = self.grid.q() as u64;
        let guesses: Vec<u32> = f.guesses[..f.level as usize - 1]
            .iter()
            .map(|&k| ((2 * k as u64 + q - 1) / (2 * q)) as u32)
            .collect();
        let parent = self.family(f.cell, &guesses).ok()?;
        let anchor = parent.strip_of_residual(slab.anchor as f64 * f.width);
        Some(parent.slab(anchor))
    }
}

/// All strips of one `(cell, guesses)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFamily {
    pub grid: Grid,
    pub cell: Cell,
    pub level: u32,
    pub guesses: Vec<u32>,
    pub alphas: Vec<f64>,
    pub x_l: f64,
    pub width: f64,
    pub k_min: i64,
    pub k_max: i64,
}

impl PolyFamily {
    /// `T(x) = Σ α_j (x − x_l)^j / j!`.
    pub fn offset(&self, x: f64) -> f64 {
        let u = x - self.x_l;
        let mut fact = 1.0;
        let mut pow = 1.0;
        let mut acc = 0.0;
        for (j, a) in self.alphas.iter().enumerate() {
            pow *= u;
            fact *= (j + 1) as f64;
            acc += a * pow / fact;
        }
        acc
    }

    pub fn residual(&self, p: [f64; 2]) -> f64 {
        p[1] - self.offset(p[0])
    }

    pub fn count(&self) -> i64 {
        self.k_max - self.k_min + 1
    }

    pub fn strip_of_residual(&self, r: f64) -> i64 {
        let guess = (r / self.width).floor();
        let guess = if guess.is_finite() { guess as i64 - self.k_min } else { 0 };
        self.k_min + strip_index(r, self.count(), |i| (self.k_min + i) as f64 * self.width, guess)
    }

    /// Anchor index of the strip holding `p`, ignoring cell membership.
    pub fn strip_of(&self, p: [f64; 2]) -> i64 {
        self.strip_of_residual(self.residual(p))
    }

    pub fn in_cell(&self, p: [f64; 2]) -> bool {
        in_owner_cell(&self.grid, self.cell, p)
    }

    pub fn slab(&self, anchor: i64) -> PolySlab {
        PolySlab { family: self.clone(), anchor }
    }
}

/// One strip `L(x) ≤ y < L(x) + w` over the owner cell's x-range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySlab {
    pub family: PolyFamily,
    pub anchor: i64,
}

impl PolySlab {
    pub fn level(&self) -> u32 {
        self.family.level
    }

    pub fn vertical_width(&self) -> f64 {
        self.family.width
    }

    pub fn x_range(&self) -> (f64, f64) {
        let g = &self.family.grid;
        (g.line(self.family.cell.col), g.line(self.family.cell.col + 1))
    }

    pub fn lower(&self, x: f64) -> f64 {
        self.family.offset(x) + self.anchor as f64 * self.family.width
    }

    pub fn upper(&self, x: f64) -> f64 {
        self.lower(x) + self.family.width
    }

    /// `L` as a polynomial in the global `x`.
    pub fn lower_boundary(&self) -> MultiPoly {
        let mut c = vec![self.anchor as f64 * self.family.width];
        let mut fact = 1.0;
        for (j, a) in self.family.alphas.iter().enumerate() {
            fact *= (j + 1) as f64;
            c.push(a / fact);
        }
        MultiPoly::univariate(&c).affine_axis(0, 1.0, -self.family.x_l)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.family.in_cell(p) && self.family.strip_of(p) == self.anchor
    }
}

/// Anchors `lo..=hi` of one polynomial family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorCover {
    pub family: PolyFamily,
    pub lo: i64,
    pub hi: i64,
}

impl TaylorCover {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn slabs(&self) -> Vec<PolySlab> {
        (self.lo..=self.hi).map(|k| self.family.slab(k)).collect()
    }
}

/// Covers a sub-curve of `Z(P)` by level-`order` slabs. The curve's
/// derivatives at its leftmost sample define a Taylor polynomial, whose
/// derivatives at the cell's left edge are snapped to the guess lattice;
/// the strips of that family met by the samples form the cover.
pub fn cover_taylor(
    sc: &SubCurve,
    p: &MultiPoly,
    hier: &IslabHierarchy,
    order: usize,
    opts: &CoverOptions,
) -> Result<TaylorCover, CoverError> {
    let max = hier.max_level() as usize;
    if order == 0 || order > max {
        return Err(CoverError::OrderTooHigh { order, max });
    }
    let left = *sc
        .samples
        .iter()
        .min_by(|a, b| a[0].total_cmp(&b[0]))
        .ok_or_else(|| CoverError::InvalidArgument("empty sub-curve".into()))?;
    let d = implicit_derivatives(p, left, order)?;
    for (j, &v) in d.iter().enumerate() {
        if !(v.abs() <= hier.c()) {
            return Err(CoverError::DerivativeOutOfRange { order: j + 1, value: v, bound: hier.c() });
        }
    }
    // derivatives of the Taylor polynomial at the cell's left edge
    let x_l = hier.grid().line(sc.owner_cell.col);
    let h = x_l - left[0];
    let level = order as u32;
    let mut guesses = Vec::with_capacity(order);
    for j in 1..=order {
        let mut v = 0.0;
        let mut term = 1.0;
        for m in j..=order {
            v += d[m - 1] * term;
            term *= h / (m - j + 1) as f64;
        }
        guesses.push(hier.snap(level, j as u32, v)?);
    }
    let family = hier.family(sc.owner_cell, &guesses)?;
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &s in &sc.samples {
        let r = family.residual(s);
        let k = family.strip_of_residual(r);
        lo = lo.min(k);
        hi = hi.max(k);
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    let pad = opts.pad_fraction * family.width;
    if lo > family.k_min && rmin - lo as f64 * family.width < pad {
        lo -= 1;
    }
    if hi < family.k_max && (hi + 1) as f64 * family.width - rmax < pad {
        hi += 1;
    }
    let count = (hi - lo + 1) as usize;
    if count > opts.max_slabs {
        return Err(CoverError::TooManySlabs { count, cap: opts.max_slabs });
    }
    Ok(TaylorCover { family, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{refine_subcurves_with, RefineOptions};
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_parameters() {
        let g = Grid::new(4).unwrap();
        assert!(build_islab_hierarchy(&g, 1, 2.0).is_err());
        assert!(build_islab_hierarchy(&g, 3, 0.5).is_err());
    }

    #[test]
    fn level_one_counts() {
        let q = 8;
        let g = Grid::new(q).unwrap();
        let h = build_islab_hierarchy(&g, 2, 1.0).unwrap();
        assert_eq!(h.guess_count(1, 1), q as u64 + 1);
        assert_eq!(h.guess_value(1, 1, 0), -1.0);
        assert_eq!(h.guess_value(1, 1, q), 1.0);
        let (lo, hi) = h.anchor_range(3, 1);
        let anchors = (hi - lo + 1) as f64;
        // one cell height plus the reach on both sides, in units of 1/q²
        let expect = (1.0 + 2.0 * (E - 1.0)) * q as f64;
        assert!((anchors - expect).abs() <= 2.0);
        let s = h.summary();
        assert_eq!(s.levels, vec![1]);
        let per_cell = s.total / (q * q) as f64;
        assert!((per_cell - (q + 1) as f64 * expect).abs() <= 2.0 * (q + 1) as f64);
    }

    #[test]
    fn snapping_ties_go_down() {
        let g = Grid::new(4).unwrap();
        let h = build_islab_hierarchy(&g, 2, 1.0).unwrap();
        // step 0.5: −1, −0.5, 0, 0.5, 1
        assert_eq!(h.snap(1, 1, -0.75).unwrap(), 0);
        assert_eq!(h.snap(1, 1, -0.74).unwrap(), 1);
        assert_eq!(h.snap(1, 1, 1.0).unwrap(), 4);
        assert!(h.snap(1, 1, 1.01).is_err());
    }

    #[test]
    fn children_per_parent() {
        let q = 4u32;
        let g = Grid::new(q).unwrap();
        let h = build_islab_hierarchy(&g, 3, 1.0).unwrap();
        let cell = Cell::new(1, 2);
        let parent_family = h.family(cell, &[2]).unwrap();
        let (lo, hi) = h.anchor_range(cell.row, 1);
        let parent = parent_family.slab((lo + hi) / 2);
        let mut children = 0u64;
        for k1 in 0..h.guess_count(2, 1) as u32 {
            for k2 in 0..h.guess_count(2, 2) as u32 {
                let f = h.family(cell, &[k1, k2]).unwrap();
                for a in f.k_min..=f.k_max {
                    if h.parent(&f.slab(a)).as_ref() == Some(&parent) {
                        children += 1;
                    }
                }
            }
        }
        let q = q as u64;
        assert_eq!(children, q * (q + 1) * q);
    }

    #[test]
    fn slabs_are_uniform() {
        let g = Grid::new(8).unwrap();
        let h = build_islab_hierarchy(&g, 4, 2.0).unwrap();
        let f = h.family(Cell::new(5, 2), &[100, 17, 3]).unwrap();
        let s = f.slab(f.k_min + 40);
        let l = s.lower_boundary();
        let (a, b) = s.x_range();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=100 {
            let x = a + (b - a) * i as f64 / 100.0;
            assert!((l.eval(&[x]) - s.lower(x)).abs() < 1e-12);
            let gap = s.upper(x) - s.lower(x);
            lo = lo.min(gap);
            hi = hi.max(gap);
        }
        assert!(hi - lo <= 1e-12);
        assert_eq!(s.vertical_width(), 1.0 / 8f64.powi(4));
    }

    #[test]
    fn straight_segment_uses_nearest_slope() {
        let q = 16u32;
        let g = Grid::new(q).unwrap();
        let h = build_islab_hierarchy(&g, 2, 1.0).unwrap();
        let p = MultiPoly::bivariate(&[(0, 1, 1.0), (1, 0, -0.3), (0, 0, -0.21)]);
        let subs = refine_subcurves_with(&p, &g, &RefineOptions { curvature_budget: None, ..Default::default() }).unwrap();
        let qf = q as f64;
        for sc in &subs {
            let cover = cover_taylor(sc, &p, &h, 1, &CoverOptions::default()).unwrap();
            let alpha = cover.family.alphas[0];
            assert!((alpha - 0.3).abs() <= 1.0 / qf + 1e-12);
            let r: Vec<f64> = sc.samples.iter().map(|&s| cover.family.residual(s)).collect();
            let spread = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - r.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread <= (2.0 / qf) * (1.0 / qf) + 1e-12);
            let slabs = cover.slabs();
            assert!(sc.samples.iter().filter(|&&s| g.cell_of(s) == sc.owner_cell).all(|&s| slabs.iter().any(|sl| sl.contains(s))));
        }
    }

    #[test]
    fn parabola_is_covered_at_level_two() {
        let q = 8u32;
        let g = Grid::new(q).unwrap();
        let h = build_islab_hierarchy(&g, 3, 2.0).unwrap();
        let p = MultiPoly::bivariate(&[(0, 1, 1.0), (2, 0, -0.8), (1, 0, 0.3), (0, 0, -0.2)]);
        let subs = refine_subcurves_with(&p, &g, &RefineOptions { curvature_budget: None, ..Default::default() }).unwrap();
        assert!(!subs.is_empty());
        for sc in &subs {
            let cover = cover_taylor(sc, &p, &h, 2, &CoverOptions::default()).unwrap();
            assert!(cover.len() <= 16);
            assert_eq!(cover.family.width, 1.0 / 512.0);
            let slabs = cover.slabs();
            for &s in sc.samples.iter().filter(|&&s| g.cell_of(s) == sc.owner_cell) {
                assert!(slabs.iter().any(|sl| sl.contains(s)));
            }
        }
    }

    #[test]
    fn order_beyond_hierarchy_is_rejected() {
        let g = Grid::new(4).unwrap();
        let h = build_islab_hierarchy(&g, 3, 1.0).unwrap();
        let p = MultiPoly::bivariate(&[(0, 1, 1.0), (0, 0, -0.5)]);
        let sc = SubCurve { owner_cell: Cell::new(1, 1), samples: vec![[0.3, 0.5], [0.4, 0.5]], kappa: 0.0, singular_free: true };
        assert!(matches!(cover_taylor(&sc, &p, &h, 3, &CoverOptions::default()), Err(CoverError::OrderTooHigh { .. })));
        assert!(cover_taylor(&sc, &p, &h, 2, &CoverOptions::default()).is_ok());
    }

    #[test]
    fn steep_curve_is_out_of_range() {
        let g = Grid::new(4).unwrap();
        let h = build_islab_hierarchy(&g, 2, 1.0).unwrap();
        let p = MultiPoly::bivariate(&[(0, 1, 1.0), (1, 0, -3.0)]);
        let sc = SubCurve { owner_cell: Cell::new(1, 0), samples: vec![[0.1, 0.3], [0.12, 0.36]], kappa: 0.0, singular_free: true };
        assert!(matches!(cover_taylor(&sc, &p, &h, 1, &CoverOptions::default()), Err(CoverError::DerivativeOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn sibling_strips_partition_the_cell(x in 0.0f64..1.0, y in 0.0f64..1.0, k1 in 0u32..=64, k2 in 0u32..=8) {
            let g = Grid::new(8).unwrap();
            let h = build_islab_hierarchy(&g, 3, 1.5).unwrap();
            let p = [x, y];
            let f = h.family(g.cell_of(p), &[k1, k2]).unwrap();
            let hits = (f.k_min..=f.k_max).filter(|&a| f.slab(a).contains(p)).count();
            prop_assert_eq!(hits, 1);
            // the owning strip satisfies the residual inequalities directly
            let a = f.strip_of(p);
            let r = p[1] - f.offset(p[0]);
            prop_assert!(r >= a as f64 * f.width && r < (a + 1) as f64 * f.width);
        }
    }
}
