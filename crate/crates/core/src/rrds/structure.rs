//! Building the structure: cell buckets, lazily materialized strip lists
//! and the modeled space counter.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell_index, Mode, RrdsError, DEFAULT_MAX_DEGREE};
use crate::cover::{build_islab_hierarchy, build_rotated_family, CoverOptions, IslabHierarchy, RotatedCatalog, Slab};
use crate::curve::{Cell, Grid};
use crate::poly::monic_param_count;

/// Cached families beyond this are dropped wholesale.
const LIST_CACHE_CAP: usize = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub q: u32,
    pub mode: Mode,
    #[serde(default)]
    pub cover: CoverOptions,
    /// Largest accepted factor degree.
    #[serde(default = "default_max_degree")]
    pub max_degree: u32,
    /// Exponent of the per-slab space model; `None` uses the parameter
    /// count of a monic bivariate polynomial of degree `max_degree`.
    #[serde(default)]
    pub beta_model: Option<u32>,
    /// Point-family evaluations spent on the derivative-mode space counter
    /// before it switches to sampling families.
    #[serde(default = "default_space_budget")]
    pub space_budget: u64,
    #[serde(default)]
    pub seed: u64,
    /// Report cover failures as errors instead of scanning the cell.
    #[serde(default)]
    pub strict: bool,
}

fn default_max_degree() -> u32 {
    DEFAULT_MAX_DEGREE
}

fn default_space_budget() -> u64 {
    20_000_000
}

impl BuildConfig {
    pub fn new(q: u32, mode: Mode) -> Self {
        BuildConfig {
            q,
            mode,
            cover: CoverOptions::default(),
            max_degree: DEFAULT_MAX_DEGREE,
            beta_model: None,
            space_budget: default_space_budget(),
            seed: 0,
            strict: false,
        }
    }

    pub fn beta(&self) -> u32 {
        self.beta_model.unwrap_or_else(|| monic_param_count(2, self.max_degree) as u32)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Catalog {
    Rotated(RotatedCatalog),
    Islab(IslabHierarchy),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum FamilyKey {
    Rotated { cell: u32, angle: u32, level: u32 },
    Poly { cell: u32, guesses: Vec<u32> },
}

/// Point ids of one family grouped by strip, in id order within a strip.
pub(crate) struct StripLists {
    offsets: Vec<u32>,
    ids: Vec<u32>,
}

impl StripLists {
    fn from_indices(count: usize, members: impl Iterator<Item = (u32, usize)> + Clone) -> Self {
        let mut offsets = vec![0u32; count + 1];
        for (_, k) in members.clone() {
            offsets[k + 1] += 1;
        }
        for k in 0..count {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut ids = vec![0u32; offsets[count] as usize];
        for (id, k) in members {
            ids[fill[k] as usize] = id;
            fill[k] += 1;
        }
        StripLists { offsets, ids }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn strip(&self, k: usize) -> &[u32] {
        &self.ids[self.offsets[k] as usize..self.offsets[k + 1] as usize]
    }
}

/// Modeled space of a built structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceReport {
    pub n: usize,
    pub q: u32,
    pub mode: Mode,
    pub beta_model: u32,
    /// Bucket level `n` plus the slab terms.
    pub modeled_space: f64,
    /// `Σ |pts|^β` over the same slabs, without falling factorials or level
    /// divisors.
    pub raw_power_sum: f64,
    pub slab_count: f64,
    /// Occupancy to number of slabs.
    pub slab_histogram: BTreeMap<u64, f64>,
    /// Exponent `e` in the prediction `n^β / q^e`.
    pub exponent: f64,
    pub formula_prediction: f64,
    /// True when the slab terms were estimated from sampled families.
    pub sampled: bool,
}

/// `3β − 4`.
pub fn curvature_space_exponent(beta: u32) -> f64 {
    3.0 * beta as f64 - 4.0
}

/// `((2β − Δ)(Δ + 1) − 2) / 2`.
pub fn derivative_space_exponent(beta: u32, delta: u32) -> f64 {
    let (b, d) = (beta as f64, delta as f64);
    ((2.0 * b - d) * (d + 1.0) - 2.0) / 2.0
}

/// `m (m−1) ⋯ (m−β+1)`, the expected-value-friendly version of `m^β`.
fn falling(m: u64, beta: u32) -> f64 {
    if m < beta as u64 {
        return 0.0;
    }
    (0..beta as u64).map(|k| (m - k) as f64).product()
}

#[derive(Default)]
struct SpaceTally {
    modeled: f64,
    raw: f64,
    slabs: f64,
    hist: BTreeMap<u64, f64>,
}

impl SpaceTally {
    /// Adds one family's strips, given the sorted strip index of each point.
    fn family(&mut self, sorted: &[usize], strips: usize, beta: u32, divisor: f64, weight: f64) {
        let mut nonempty = 0usize;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            let m = (j - i) as u64;
            self.modeled += weight * falling(m, beta) / divisor;
            self.raw += weight * (m as f64).powi(beta as i32);
            *self.hist.entry(m).or_default() += weight;
            nonempty += 1;
            i = j;
        }
        *self.hist.entry(0).or_default() += weight * (strips - nonempty) as f64;
        self.slabs += weight * strips as f64;
    }

    fn merge(mut self, other: SpaceTally) -> SpaceTally {
        self.modeled += other.modeled;
        self.raw += other.raw;
        self.slabs += other.slabs;
        for (k, v) in other.hist {
            *self.hist.entry(k).or_default() += v;
        }
        self
    }
}

/// The range reporting structure. Immutable after [`RangeStructure::build`]
/// apart from the strip-list cache, which only ever publishes the one list
/// a family can have.
pub struct RangeStructure {
    points: Vec<[f64; 2]>,
    config: BuildConfig,
    grid: Grid,
    buckets: Vec<Vec<u32>>,
    pub(crate) catalog: Catalog,
    lists: Mutex<HashMap<FamilyKey, Arc<StripLists>>>,
    space: SpaceReport,
}

impl RangeStructure {
    pub fn build(points: &[[f64; 2]], config: BuildConfig) -> Result<Self, RrdsError> {
        for (index, p) in points.iter().enumerate() {
            if !((0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])) {
                return Err(RrdsError::PointOutOfSquare { index, x: p[0], y: p[1] });
            }
        }
        if points.len() >= u32::MAX as usize {
            return Err(RrdsError::InvalidConfig("too many points".into()));
        }
        let grid = Grid::new(config.q)?;
        let catalog = match config.mode {
            Mode::Curvature => Catalog::Rotated(build_rotated_family(&grid)),
            Mode::Derivative { delta, c } => Catalog::Islab(build_islab_hierarchy(&grid, delta, c)?),
        };
        let q = grid.q();
        let mut buckets = vec![Vec::new(); (q * q) as usize];
        for (i, &p) in points.iter().enumerate() {
            buckets[cell_index(q, grid.cell_of(p))].push(i as u32);
        }
        let mut s = RangeStructure {
            points: points.to_vec(),
            config,
            grid,
            buckets,
            catalog,
            lists: Mutex::new(HashMap::new()),
            space: SpaceReport {
                n: points.len(),
                q,
                mode: config.mode,
                beta_model: config.beta(),
                modeled_space: 0.0,
                raw_power_sum: 0.0,
                slab_count: 0.0,
                slab_histogram: BTreeMap::new(),
                exponent: 0.0,
                formula_prediction: 0.0,
                sampled: false,
            },
        };
        s.space = s.compute_space();
        Ok(s)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn bucket(&self, cell: Cell) -> &[u32] {
        &self.buckets[cell_index(self.grid.q(), cell)]
    }

    pub fn rotated_catalog(&self) -> Option<&RotatedCatalog> {
        match &self.catalog {
            Catalog::Rotated(c) => Some(c),
            Catalog::Islab(_) => None,
        }
    }

    pub fn islab_hierarchy(&self) -> Option<&IslabHierarchy> {
        match &self.catalog {
            Catalog::Islab(h) => Some(h),
            Catalog::Rotated(_) => None,
        }
    }

    pub fn space_report(&self) -> &SpaceReport {
        &self.space
    }

    /// Ids of the points in one slab, from the family's strip lists.
    pub fn slab_points(&self, slab: &Slab) -> Result<Vec<u32>, RrdsError> {
        let q = self.grid.q();
        let (key, k) = match slab {
            Slab::Rotated(s) => (
                FamilyKey::Rotated { cell: cell_index(q, s.cell) as u32, angle: s.angle_index, level: s.level },
                s.offset_index as usize,
            ),
            Slab::Poly(s) => (
                FamilyKey::Poly { cell: cell_index(q, s.family.cell) as u32, guesses: s.family.guesses.clone() },
                (s.anchor - s.family.k_min) as usize,
            ),
        };
        let lists = self.strip_lists(&key)?;
        if k >= lists.len() {
            return Err(RrdsError::InvalidRange(format!("strip {k} outside its family")));
        }
        Ok(lists.strip(k).to_vec())
    }

    fn cell_of_index(&self, idx: u32) -> Cell {
        let q = self.grid.q();
        Cell::new(idx / q, idx % q)
    }

    pub(crate) fn strip_lists(&self, key: &FamilyKey) -> Result<Arc<StripLists>, RrdsError> {
        if let Some(l) = self.lists.lock().expect("cache lock").get(key) {
            return Ok(l.clone());
        }
        let built = Arc::new(self.materialize(key)?);
        let mut cache = self.lists.lock().expect("cache lock");
        if cache.len() >= LIST_CACHE_CAP {
            cache.clear();
        }
        Ok(cache.entry(key.clone()).or_insert(built).clone())
    }

    fn materialize(&self, key: &FamilyKey) -> Result<StripLists, RrdsError> {
        match (key, &self.catalog) {
            (FamilyKey::Rotated { cell, angle, level }, Catalog::Rotated(cat)) => {
                let c = self.cell_of_index(*cell);
                let f = cat.family(c, *angle, *level);
                let bucket = self.bucket(c);
                let members = bucket.iter().map(|&id| (id, f.strip_of(self.points[id as usize]) as usize));
                Ok(StripLists::from_indices(f.count as usize, members))
            }
            (FamilyKey::Poly { cell, guesses }, Catalog::Islab(h)) => {
                let c = self.cell_of_index(*cell);
                let f = h.family(c, guesses)?;
                let bucket = self.bucket(c);
                let members = bucket.iter().map(|&id| (id, (f.strip_of(self.points[id as usize]) - f.k_min) as usize));
                Ok(StripLists::from_indices(f.count() as usize, members))
            }
            _ => Err(RrdsError::InvalidConfig("family kind does not match the structure's mode".into())),
        }
    }

    fn compute_space(&self) -> SpaceReport {
        let beta = self.config.beta();
        let n = self.points.len();
        let q = self.grid.q();
        let (tally, sampled, exponent) = match &self.catalog {
            Catalog::Rotated(cat) => (self.rotated_space(cat, beta), false, curvature_space_exponent(beta)),
            Catalog::Islab(h) => {
                let (t, sampled) = self.islab_space(h, beta);
                (t, sampled, derivative_space_exponent(beta, h.delta()))
            }
        };
        let nf = n as f64;
        let prediction = (beta as f64 * nf.ln() - exponent * (q as f64).ln()).exp();
        SpaceReport {
            n,
            q,
            mode: self.config.mode,
            beta_model: beta,
            modeled_space: nf + tally.modeled,
            raw_power_sum: tally.raw,
            slab_count: tally.slabs,
            slab_histogram: tally.hist,
            exponent,
            formula_prediction: if n == 0 { 0.0 } else { prediction },
            sampled,
        }
    }

    /// Every rotated slab contributes `falling(|pts|, β) / (2^i)^β`; the
    /// divisor is the per-slab query budget `q·α` of a level-`i` slab.
    fn rotated_space(&self, cat: &RotatedCatalog, beta: u32) -> SpaceTally {
        let q = self.grid.q();
        let cells: Vec<u32> = (0..q * q).collect();
        cells
            .par_iter()
            .map(|&ci| {
                let cell = self.cell_of_index(ci);
                let pts: Vec<[f64; 2]> = self.bucket(cell).iter().map(|&i| self.points[i as usize]).collect();
                let mut t = SpaceTally::default();
                let mut idx = Vec::with_capacity(pts.len());
                for j in 1..=cat.angle_count() {
                    for level in 0..=cat.max_level() {
                        let f = cat.family(cell, j, level);
                        idx.clear();
                        idx.extend(pts.iter().map(|&p| f.strip_of(p) as usize));
                        idx.sort_unstable();
                        let divisor = 2f64.powi((level * beta) as i32);
                        t.family(&idx, f.count as usize, beta, divisor, 1.0);
                    }
                }
                t
            })
            .reduce(SpaceTally::default, SpaceTally::merge)
    }

    /// Top-level polynomial slabs only. Enumerates every guess tuple while
    /// that fits the budget and otherwise a seeded sample per cell.
    fn islab_space(&self, h: &IslabHierarchy, beta: u32) -> (SpaceTally, bool) {
        let q = self.grid.q();
        let level = h.max_level();
        let radices: Vec<u64> = (1..=level).map(|j| h.guess_count(level, j)).collect();
        let per_cell = h.families_per_cell(level);
        let n = self.points.len().max(1) as f64;
        let sampled = per_cell * n > self.config.space_budget as f64;
        let draws = if sampled { ((self.config.space_budget as f64 / n).floor() as u64).max(1) } else { 0 };
        let cells: Vec<u32> = (0..q * q).collect();
        let tally = cells
            .par_iter()
            .map(|&ci| {
                let cell = self.cell_of_index(ci);
                let pts: Vec<[f64; 2]> = self.bucket(cell).iter().map(|&i| self.points[i as usize]).collect();
                let mut t = SpaceTally::default();
                let mut idx = Vec::with_capacity(pts.len());
                let mut visit = |guesses: &[u32], weight: f64| {
                    let f = h.family(cell, guesses).expect("guesses within their lattice");
                    idx.clear();
                    idx.extend(pts.iter().map(|&p| (f.strip_of(p) - f.k_min) as usize));
                    idx.sort_unstable();
                    t.family(&idx, f.count() as usize, beta, 1.0, weight);
                };
                if sampled {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (ci as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                    let weight = per_cell / draws as f64;
                    let mut g = vec![0u32; radices.len()];
                    for _ in 0..draws {
                        for (slot, &r) in g.iter_mut().zip(&radices) {
                            *slot = rng.gen_range(0..r) as u32;
                        }
                        visit(&g, weight);
                    }
                } else {
                    let mut g = vec![0u32; radices.len()];
                    loop {
                        visit(&g, 1.0);
                        let mut pos = 0;
                        while pos < g.len() {
                            g[pos] += 1;
                            if (g[pos] as u64) < radices[pos] {
                                break;
                            }
                            g[pos] = 0;
                            pos += 1;
                        }
                        if pos == g.len() {
                            break;
                        }
                    }
                }
                t
            })
            .reduce(SpaceTally::default, SpaceTally::merge);
        (tally, sampled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
    }

    #[test]
    fn rejects_points_outside() {
        let err = RangeStructure::build(&[[0.5, 0.5], [1.5, 0.2]], BuildConfig::new(4, Mode::Curvature));
        assert!(matches!(err, Err(RrdsError::PointOutOfSquare { index: 1, .. })));
        let err = RangeStructure::build(&[[f64::NAN, 0.5]], BuildConfig::new(4, Mode::Curvature));
        assert!(matches!(err, Err(RrdsError::PointOutOfSquare { index: 0, .. })));
    }

    #[test]
    fn single_point() {
        let mut cfg = BuildConfig::new(2, Mode::Curvature);
        cfg.beta_model = Some(1);
        let s = RangeStructure::build(&[[0.3, 0.7]], cfg).unwrap();
        let total: usize = s.grid().cells().map(|c| s.bucket(c).len()).sum();
        assert_eq!(total, 1);
        assert_eq!(s.bucket(Cell::new(1, 0)), &[0]);
        // with β = 1 and no level divisor at level 0, each family holds the
        // point once
        let r = s.space_report();
        let cat = s.rotated_catalog().unwrap();
        let families = (cat.angle_count() * (cat.max_level() + 1)) as f64;
        assert_eq!(r.raw_power_sum, families);
        assert_eq!(r.slab_histogram[&1], families);
    }

    #[test]
    fn bucket_sizes_are_binomial() {
        let n = 10_000;
        let q = 16;
        let s = RangeStructure::build(&uniform(n, 3), BuildConfig::new(q, Mode::Curvature)).unwrap();
        let p = 1.0 / (q * q) as f64;
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let sizes: Vec<f64> = s.grid().cells().map(|c| s.bucket(c).len() as f64).collect();
        let avg = sizes.iter().sum::<f64>() / sizes.len() as f64;
        assert!((avg - 39.0625).abs() < 1e-9);
        let within = sizes.iter().filter(|&&m| (m - mean).abs() <= 3.0 * sd).count();
        assert!(within as f64 >= 0.99 * sizes.len() as f64);
    }

    #[test]
    fn strip_lists_partition_the_bucket() {
        let pts = uniform(2000, 5);
        let s = RangeStructure::build(&pts, BuildConfig::new(4, Mode::Curvature)).unwrap();
        let cell = Cell::new(1, 2);
        let key = FamilyKey::Rotated { cell: cell_index(4, cell) as u32, angle: 7, level: 1 };
        let lists = s.strip_lists(&key).unwrap();
        let mut all: Vec<u32> = (0..lists.len()).flat_map(|k| lists.strip(k).to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, s.bucket(cell));
        let again = s.strip_lists(&key).unwrap();
        assert!(Arc::ptr_eq(&lists, &again));
        let f = s.rotated_catalog().unwrap().family(cell, 7, 1);
        for k in 0..lists.len() {
            let slab = Slab::Rotated(f.slab(k as u32));
            for id in s.slab_points(&slab).unwrap() {
                assert!(crate::cover::slab_contains(&slab, pts[id as usize]));
            }
        }
    }

    #[test]
    fn slab_occupancy_matches_width() {
        // a level-i strip of a cell holds about n·(1/q)·(α/q) points
        let n = 20_000;
        let q = 8;
        let s = RangeStructure::build(&uniform(n, 11), BuildConfig::new(q, Mode::Curvature)).unwrap();
        let cat = *s.rotated_catalog().unwrap();
        let level = 2;
        let alpha = (1u32 << level) as f64 / q as f64;
        let expect = n as f64 * alpha / (q * q) as f64;
        let mut inner = Vec::new();
        for cell in s.grid().cells() {
            // an axis-aligned family: all inner strips are full rectangles
            let j = (std::f64::consts::PI * q as f64).round() as u32;
            let f = cat.family(cell, j, level);
            let key = FamilyKey::Rotated { cell: cell_index(q, cell) as u32, angle: j, level };
            let lists = s.strip_lists(&key).unwrap();
            for k in 1..f.count as usize - 1 {
                inner.push(lists.strip(k).len() as f64);
            }
        }
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        let sd = (expect / inner.len() as f64).sqrt();
        assert!((mean - expect).abs() < 3.0 * sd + 0.05 * expect, "mean {mean} vs {expect}");
    }

    #[test]
    fn exponents() {
        assert_eq!(curvature_space_exponent(3), 5.0);
        for delta in 2..=4 {
            let beta = delta + 1;
            assert_eq!(derivative_space_exponent(beta, delta), (delta * (delta + 3)) as f64 / 2.0);
        }
    }

    #[test]
    fn derivative_space_is_sampled_past_the_budget() {
        let pts = uniform(500, 2);
        let mut cfg = BuildConfig::new(4, Mode::Derivative { delta: 3, c: 2.0 });
        cfg.beta_model = Some(2);
        let full = RangeStructure::build(&pts, cfg).unwrap();
        assert!(!full.space_report().sampled);
        cfg.space_budget = 5_000;
        let est = RangeStructure::build(&pts, cfg).unwrap();
        let (a, b) = (full.space_report(), est.space_report());
        assert!(b.sampled);
        assert!((a.slab_count - b.slab_count).abs() < 1e-6 * a.slab_count);
        let rel = (a.modeled_space - b.modeled_space).abs() / a.modeled_space;
        assert!(rel < 0.5, "{} vs {}", a.modeled_space, b.modeled_space);
    }
}
