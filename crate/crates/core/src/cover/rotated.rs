//! Rotated strip families and curvature-driven covers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{strip_index, CatalogSummary, CoverError, CoverOptions};
use crate::curve::{dist, Cell, Grid, SubCurve, CURVATURE_BUDGET};

/// All rotated families of a grid: one per cell, angle `j/q` with
/// `j = 1..=⌊2πq⌋`, and level `i = 0..=⌊log₂ q⌋` of strip width `2^i/q²`.
/// Families are computed on demand from their index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotatedCatalog {
    grid: Grid,
    max_level: u32,
    angles: u32,
}

pub fn build_rotated_family(grid: &Grid) -> RotatedCatalog {
    let q = grid.q();
    RotatedCatalog { grid: *grid, max_level: 31 - q.leading_zeros(), angles: (2.0 * PI * q as f64).floor() as u32 }
}

impl RotatedCatalog {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn angle_count(&self) -> u32 {
        self.angles
    }

    pub fn width(&self, level: u32) -> f64 {
        let q = self.grid.q() as f64;
        (1u64 << level) as f64 / (q * q)
    }

    /// Strips per family; the same for every cell.
    pub fn family_size(&self, angle_index: u32, level: u32) -> u32 {
        let g = angle_index as f64 / self.grid.q() as f64;
        let ratio = (g.cos().abs() + g.sin().abs()) * self.grid.q() as f64 / (1u64 << level) as f64;
        ((ratio - 1e-9).ceil() as u32).max(1)
    }

    pub fn family(&self, cell: Cell, angle_index: u32, level: u32) -> RotatedFamily {
        RotatedFamily::new(self.grid, cell, angle_index, level)
    }

    pub fn summary(&self) -> CatalogSummary {
        let q = self.grid.q();
        let cells = (q as f64) * (q as f64);
        let counts: Vec<f64> = (0..=self.max_level)
            .map(|i| cells * (1..=self.angles).map(|j| self.family_size(j, i) as f64).sum::<f64>())
            .collect();
        CatalogSummary { q, levels: (0..=self.max_level).collect(), total: counts.iter().sum(), counts_per_level: counts }
    }

    /// `Σ_i q²·(1/α_i)·⌊2πq⌋` with `α_i = 2^i/q`.
    pub fn formula_total(&self) -> f64 {
        let q = self.grid.q() as f64;
        (0..=self.max_level).map(|i| q * q * (q / (1u64 << i) as f64) * self.angles as f64).sum()
    }
}

/// The strips of one `(cell, angle, level)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotatedFamily {
    pub grid: Grid,
    pub cell: Cell,
    pub angle_index: u32,
    pub level: u32,
    pub normal: [f64; 2],
    pub t0: f64,
    pub width: f64,
    pub count: u32,
}

impl RotatedFamily {
    fn new(grid: Grid, cell: Cell, angle_index: u32, level: u32) -> Self {
        let cat = build_rotated_family(&grid);
        let g = angle_index as f64 / grid.q() as f64;
        let normal = [-g.sin(), g.cos()];
        let t0 = grid
            .cell_rect(cell)
            .corners()
            .iter()
            .map(|c| normal[0] * c[0] + normal[1] * c[1])
            .fold(f64::INFINITY, f64::min);
        RotatedFamily {
            grid,
            cell,
            angle_index,
            level,
            normal,
            t0,
            width: cat.width(level),
            count: cat.family_size(angle_index, level),
        }
    }

    pub fn angle(&self) -> f64 {
        self.angle_index as f64 / self.grid.q() as f64
    }

    pub fn project(&self, p: [f64; 2]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1]
    }

    /// Lower boundary of strip `k` in the normal coordinate.
    pub fn lower(&self, k: i64) -> f64 {
        self.t0 + k as f64 * self.width
    }

    /// Strip index of `p`'s projection, ignoring cell membership.
    pub fn strip_of(&self, p: [f64; 2]) -> u32 {
        let t = self.project(p);
        let guess = ((t - self.t0) / self.width).floor();
        let guess = if guess.is_finite() { guess as i64 } else { 0 };
        strip_index(t, self.count as i64, |k| self.lower(k), guess) as u32
    }

    pub fn in_cell(&self, p: [f64; 2]) -> bool {
        in_owner_cell(&self.grid, self.cell, p)
    }

    pub fn slab(&self, k: u32) -> RotatedSlab {
        RotatedSlab {
            grid: self.grid,
            cell: self.cell,
            angle_index: self.angle_index,
            level: self.level,
            offset_index: k,
            width: self.width,
            angle: self.angle(),
        }
    }

    /// Strip `k` clipped to the cell, as a convex polygon.
    pub fn polygon(&self, k: u32) -> Vec<[f64; 2]> {
        let mut poly: Vec<[f64; 2]> = self.grid.cell_rect(self.cell).corners().to_vec();
        let n = self.normal;
        if k > 0 {
            let lo = self.lower(k as i64);
            poly = clip(&poly, |p| n[0] * p[0] + n[1] * p[1] - lo);
        }
        if k + 1 < self.count {
            let hi = self.lower(k as i64 + 1);
            poly = clip(&poly, |p| hi - (n[0] * p[0] + n[1] * p[1]));
        }
        poly
    }
}

pub(crate) fn in_owner_cell(grid: &Grid, cell: Cell, p: [f64; 2]) -> bool {
    (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) && grid.cell_of(p) == cell
}

/// Keeps the part of a convex polygon where `f ≥ 0`.
fn clip(poly: &[[f64; 2]], f: impl Fn([f64; 2]) -> f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (fa, fb) = (f(a), f(b));
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// One strip of a rotated family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedSlab {
    pub grid: Grid,
    pub cell: Cell,
    pub angle_index: u32,
    pub level: u32,
    pub offset_index: u32,
    pub width: f64,
    /// Radians, `angle_index / q`.
    pub angle: f64,
}

impl RotatedSlab {
    pub fn family(&self) -> RotatedFamily {
        RotatedFamily::new(self.grid, self.cell, self.angle_index, self.level)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let f = self.family();
        f.in_cell(p) && f.strip_of(p) == self.offset_index
    }
}

/// A contiguous run `lo..=hi` of strips in one rotated family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedCover {
    pub cell: Cell,
    pub angle_index: u32,
    pub level: u32,
    pub lo: u32,
    pub hi: u32,
}

impl RotatedCover {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn family(&self, catalog: &RotatedCatalog) -> RotatedFamily {
        catalog.family(self.cell, self.angle_index, self.level)
    }

    pub fn slabs(&self, catalog: &RotatedCatalog) -> Vec<RotatedSlab> {
        let f = self.family(catalog);
        (self.lo..=self.hi).map(|k| f.slab(k)).collect()
    }
}

/// Lattice index of the undirected direction from the first sample to the
/// last, or to the farthest sample for a closed piece.
fn chord_angle_index(sc: &SubCurve, q: u32) -> u32 {
    let a = sc.start();
    let mut b = sc.end();
    if dist(a, b) < 1e-12 {
        b = *sc.samples.iter().max_by(|u, v| dist(a, **u).total_cmp(&dist(a, **v))).expect("nonempty");
    }
    let mut phi = (b[1] - a[1]).atan2(b[0] - a[0]);
    if phi < 0.0 {
        phi += PI;
    }
    if phi >= PI {
        phi -= PI;
    }
    let qf = q as f64;
    let j = (phi * qf).round() as u32;
    if j == 0 {
        (PI * qf).round() as u32
    } else {
        j
    }
}

/// Covers a sub-curve by at most `max_slabs` strips of one rotated family:
/// the chord direction fixes the angle, and the level is the smallest whose
/// width reaches `c_cover·κ/q + 1/q²`, escalating while the cover is too big.
pub fn cover_curvature(sc: &SubCurve, catalog: &RotatedCatalog, opts: &CoverOptions) -> Result<RotatedCover, CoverError> {
    if sc.kappa > CURVATURE_BUDGET + 1e-6 {
        return Err(CoverError::CurvatureTooLarge { kappa: sc.kappa });
    }
    if !sc.singular_free {
        return Err(CoverError::NotSingularFree);
    }
    if sc.samples.is_empty() {
        return Err(CoverError::InvalidArgument("empty sub-curve".into()));
    }
    let q = catalog.grid().q();
    let qf = q as f64;
    let target = opts.c_cover * sc.kappa / qf + 1.0 / (qf * qf);
    let mut level = 0;
    while level < catalog.max_level() && catalog.width(level) < target {
        level += 1;
    }
    let j = chord_angle_index(sc, q);
    for level in level..=catalog.max_level() {
        let f = catalog.family(sc.owner_cell, j, level);
        let (mut lo, mut hi) = (u32::MAX, 0);
        let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in &sc.samples {
            let k = f.strip_of(p);
            lo = lo.min(k);
            hi = hi.max(k);
            let t = f.project(p);
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
        let pad = opts.pad_fraction * f.width;
        if lo > 0 && tmin - f.lower(lo as i64) < pad {
            lo -= 1;
        }
        if hi + 1 < f.count && f.lower(hi as i64 + 1) - tmax < pad {
            hi += 1;
        }
        if ((hi - lo + 1) as usize) <= opts.max_slabs {
            return Ok(RotatedCover { cell: sc.owner_cell, angle_index: j, level, lo, hi });
        }
    }
    Err(CoverError::NoCover { cap: opts.max_slabs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn level_zero_family_sizes() {
        let cat = build_rotated_family(&Grid::new(8).unwrap());
        assert_eq!(cat.angle_count(), 50);
        assert_eq!(cat.max_level(), 3);
        for j in 1..=cat.angle_count() {
            let g = j as f64 / 8.0;
            let n = cat.family_size(j, 0);
            // axis-aligned families need q strips; diagonal ones up to q√2
            let ideal = (g.cos().abs() + g.sin().abs()) * 8.0;
            assert!(n as f64 >= ideal - 1e-9 && (n as f64) < ideal + 1.0);
            if (g.sin() * g.cos()).abs() < 0.05 {
                assert!((7..=9).contains(&n), "j = {j}: {n}");
            }
        }
    }

    #[test]
    fn full_width_level_has_one_or_two_strips() {
        let cat = build_rotated_family(&Grid::new(2).unwrap());
        assert_eq!(cat.max_level(), 1);
        for j in 1..=cat.angle_count() {
            assert!((1..=2).contains(&cat.family_size(j, 1)));
        }
    }

    #[test]
    fn catalog_total_tracks_formula() {
        for q in [4, 8, 16, 32] {
            let cat = build_rotated_family(&Grid::new(q).unwrap());
            let s = cat.summary();
            let ratio = s.total / cat.formula_total();
            assert!((1.0 / 8.0..=8.0).contains(&ratio), "q = {q}: {ratio}");
            assert_eq!(s.counts_per_level.len(), s.levels.len());
        }
    }

    #[test]
    fn strip_polygons_tile_the_cell() {
        let g = Grid::new(8).unwrap();
        let cat = build_rotated_family(&g);
        let f = cat.family(Cell::new(3, 5), 7, 1);
        let area: f64 = (0..f.count)
            .map(|k| {
                let p = f.polygon(k);
                0.5 * (0..p.len())
                    .map(|i| {
                        let (a, b) = (p[i], p[(i + 1) % p.len()]);
                        a[0] * b[1] - b[0] * a[1]
                    })
                    .sum::<f64>()
            })
            .sum();
        assert!((area - 1.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn straight_chord_at_lattice_angle_takes_one_level_zero_slab() {
        let g = Grid::new(8).unwrap();
        let cat = build_rotated_family(&g);
        let gamma: f64 = 3.0 / 8.0;
        let cell = Cell::new(2, 2);
        let f = cat.family(cell, 3, 0);
        // a chord through the middle of strip 4, parallel to the strips
        let t = f.lower(4) + 0.5 * f.width;
        let base = [t * f.normal[0], t * f.normal[1]];
        let dir = [gamma.cos(), gamma.sin()];
        let r = g.cell_rect(cell);
        let samples: Vec<[f64; 2]> = (-1000..=1000)
            .map(|s| {
                let u = s as f64 * 1e-3;
                [base[0] + u * dir[0], base[1] + u * dir[1]]
            })
            .filter(|p| r.contains(*p, 0.0))
            .collect();
        assert!(samples.len() > 10);
        let sc = SubCurve { owner_cell: cell, samples, kappa: 0.0, singular_free: true };
        let cover = cover_curvature(&sc, &cat, &CoverOptions::default()).unwrap();
        assert_eq!((cover.level, cover.angle_index, cover.len()), (0, 3, 1));
    }

    #[test]
    fn curved_arc_width_bound() {
        let q = 16u32;
        let g = Grid::new(q).unwrap();
        let cat = build_rotated_family(&g);
        // an arc of a circle of radius 1/(2q) turning by π/8, inside one cell
        let cell = Cell::new(8, 8);
        let [cx, cy] = g.cell_rect(cell).center();
        let rad = 0.4 / q as f64;
        let samples: Vec<[f64; 2]> = (0..=50)
            .map(|i| {
                let a = i as f64 / 50.0 * PI / 8.0;
                [cx - rad * 0.5 + rad * a.cos(), cy - rad * 0.5 + rad * a.sin()]
            })
            .collect();
        let sc = SubCurve { owner_cell: cell, samples: samples.clone(), kappa: PI / 8.0, singular_free: true };
        let cover = cover_curvature(&sc, &cat, &CoverOptions::default()).unwrap();
        let qf = q as f64;
        assert!(cat.width(cover.level) <= 64.0 * (PI / 8.0 / qf + 1.0 / (qf * qf)));
        let slabs = cover.slabs(&cat);
        assert!(samples.iter().all(|&p| slabs.iter().any(|s| s.contains(p))));
    }

    #[test]
    fn over_budget_curvature_is_rejected() {
        let cat = build_rotated_family(&Grid::new(4).unwrap());
        let sc = SubCurve { owner_cell: Cell::new(0, 0), samples: vec![[0.1, 0.1], [0.2, 0.1]], kappa: 1.0, singular_free: true };
        assert!(matches!(cover_curvature(&sc, &cat, &CoverOptions::default()), Err(CoverError::CurvatureTooLarge { .. })));
    }

    proptest! {
        #[test]
        fn every_cell_point_is_in_exactly_one_strip(
            x in 0.0f64..1.0, y in 0.0f64..1.0, j in 1u32..=100, level in 0u32..=4,
        ) {
            let g = Grid::new(16).unwrap();
            let cat = build_rotated_family(&g);
            let p = [x, y];
            let f = cat.family(g.cell_of(p), j, level);
            let hits = (0..f.count).filter(|&k| f.slab(k).contains(p)).count();
            prop_assert_eq!(hits, 1);
            // membership agrees with the strip inequalities
            let k = f.strip_of(p) as i64;
            let t = f.project(p);
            prop_assert!(k == 0 || t >= f.lower(k));
            prop_assert!(k + 1 == f.count as i64 || t < f.lower(k + 1));
        }
    }
}
