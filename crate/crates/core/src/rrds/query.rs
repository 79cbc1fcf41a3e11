//! Answering a query: cover scans, cell chunks and certified faces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::structure::{Catalog, FamilyKey, StripLists};
use super::{cell_index, CompiledRange, CostStats, Part, QueryRange, RangeStructure, RrdsError, Sign};
use crate::cover::{cover_curvature, cover_taylor, PolyFamily, RotatedCover, RotatedFamily, TaylorCover};
use crate::curve::{
    certify_zero_free, certify_zero_free_where, refine_subcurves_with, zero_free_sign, Cell, Grid, Rect, RefineOptions,
    SubCurve,
};
use crate::poly::Bivariate;

/// Extra quadtree depth when certifying a single cell.
const CELL_DEPTH: u32 = 4;
/// Faces with at most this many points are scanned rather than certified.
const SMALL_FACE: usize = 16;
const MAX_FACE_DEPTH: u32 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Inside,
    Outside,
    /// Points were tested one by one.
    Scanned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RegionKind {
    /// Consecutive uncrossed cells `row_lo..=row_hi` of one column.
    Chunk { col: u32, row_lo: u32, row_hi: u32 },
    /// Strips `lo..=hi` of a crossed cell's primary family that no cover
    /// uses.
    Face { cell: Cell, lo: i64, hi: i64 },
    /// A crossed cell without a usable cover.
    Cell { cell: Cell },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    #[serde(flatten)]
    pub kind: RegionKind,
    pub verdict: Verdict,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum UsedCover {
    Rotated(RotatedCover),
    Taylor(TaylorCover),
}

impl UsedCover {
    pub fn len(&self) -> usize {
        match self {
            UsedCover::Rotated(c) => c.len(),
            UsedCover::Taylor(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self) -> Cell {
        match self {
            UsedCover::Rotated(c) => c.cell,
            UsedCover::Taylor(c) => c.family.cell,
        }
    }
}

/// What a query did besides producing ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub crossed_cells: usize,
    pub subcurves: usize,
    pub cover_sizes: Vec<usize>,
    /// Crossed cells scanned in full because a sub-curve had no cover.
    pub fallback_cells: usize,
    pub covers: Vec<UsedCover>,
    pub regions: Vec<Region>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub ids: Vec<u32>,
    pub stats: CostStats,
    pub report: QueryReport,
}

struct Scan<'a> {
    points: &'a [[f64; 2]],
    range: &'a CompiledRange,
    visited: Vec<u64>,
    out: Vec<u32>,
    stats: CostStats,
}

impl Scan<'_> {
    fn seen(&self, id: u32) -> bool {
        self.visited[id as usize / 64] >> (id % 64) & 1 == 1
    }

    fn mark(&mut self, id: u32) -> bool {
        let (w, b) = (id as usize / 64, id % 64);
        let fresh = self.visited[w] >> b & 1 == 0;
        self.visited[w] |= 1 << b;
        fresh
    }

    fn test(&mut self, ids: &[u32]) {
        for &id in ids {
            if self.mark(id) {
                self.stats.points_scanned += 1;
                if self.range.contains(self.points[id as usize]) {
                    self.out.push(id);
                }
            }
        }
    }

    /// Reports every unvisited id without testing it.
    fn take(&mut self, ids: &[u32]) {
        for &id in ids {
            if self.mark(id) {
                self.stats.points_scanned += 1;
                self.out.push(id);
            }
        }
    }

    fn slab(&mut self, ids: &[u32]) {
        self.stats.slabs_visited += 1;
        self.stats.dedup_checks += ids.len() as u64;
        self.test(ids);
    }

    fn unvisited(&self, ids: &[u32]) -> usize {
        ids.iter().filter(|&&id| !self.seen(id)).count()
    }
}

fn accepts(sign: Sign, certified: i8) -> bool {
    match sign {
        Sign::Le => certified < 0,
        Sign::Ge => certified > 0,
    }
}

fn block_rect(grid: &Grid, r0: u32, r1: u32, c0: u32, c1: u32) -> Rect {
    Rect::new(grid.line(c0), grid.line(r0), grid.line(c1), grid.line(r1))
}

/// Sign of `P` on every cell it provably does not vanish on, 0 elsewhere.
fn certify_cells(b: &Bivariate, grid: &Grid) -> Vec<i8> {
    let q = grid.q();
    let mut out = vec![0i8; (q * q) as usize];
    let mut stack = vec![(0, q, 0, q)];
    while let Some((r0, r1, c0, c1)) = stack.pop() {
        let rect = block_rect(grid, r0, r1, c0, c1);
        let single = r1 - r0 == 1 && c1 - c0 == 1;
        let sign = if single { certify_zero_free(b, &rect, CELL_DEPTH) } else { zero_free_sign(b, &rect) };
        if let Some(s) = sign {
            for r in r0..r1 {
                for c in c0..c1 {
                    out[(r * q + c) as usize] = s as i8;
                }
            }
        } else if !single {
            if r1 - r0 >= c1 - c0 {
                let m = (r0 + r1) / 2;
                stack.push((r0, m, c0, c1));
                stack.push((m, r1, c0, c1));
            } else {
                let m = (c0 + c1) / 2;
                stack.push((r0, r1, c0, m));
                stack.push((r0, r1, m, c1));
            }
        }
    }
    out
}

/// Strip geometry of a crossed cell's primary family.
enum FaceFamily {
    Rotated(RotatedFamily),
    /// With a Lipschitz bound of the level polynomial over the cell.
    Poly(PolyFamily, f64),
}

impl FaceFamily {
    fn width(&self) -> f64 {
        match self {
            FaceFamily::Rotated(f) => f.width,
            FaceFamily::Poly(f, _) => f.width,
        }
    }

    /// Whether `r` can meet strips `a..=b` of `count`.
    fn relevant(&self, r: &Rect, a: usize, b: usize, count: usize) -> bool {
        const SLACK: f64 = 1e-12;
        match self {
            FaceFamily::Rotated(f) => {
                let lo = if a == 0 { f64::NEG_INFINITY } else { f.lower(a as i64) - SLACK };
                let hi = if b + 1 == count { f64::INFINITY } else { f.lower(b as i64 + 1) + SLACK };
                let ts = r.corners().map(|c| f.project(c));
                let tmin = ts.iter().copied().fold(f64::INFINITY, f64::min);
                let tmax = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                tmax >= lo && tmin <= hi
            }
            FaceFamily::Poly(f, lip) => {
                let w = f.width;
                let lo = if a == 0 { f64::NEG_INFINITY } else { (f.k_min + a as i64) as f64 * w - SLACK };
                let hi = if b + 1 == count { f64::INFINITY } else { (f.k_min + b as i64 + 1) as f64 * w + SLACK };
                let tc = f.offset(0.5 * (r.x0 + r.x1));
                let spread = lip * 0.5 * r.width() + SLACK;
                let rmin = r.y0 - (tc + spread);
                let rmax = r.y1 - (tc - spread);
                rmax >= lo && rmin <= hi
            }
        }
    }
}

struct CellCover {
    key: FamilyKey,
    lo: usize,
    hi: usize,
    used: UsedCover,
}

impl RangeStructure {
    pub fn query(&self, range: &QueryRange) -> Result<(Vec<u32>, CostStats), RrdsError> {
        let o = self.query_detailed(range)?;
        Ok((o.ids, o.stats))
    }

    pub fn query_detailed(&self, range: &QueryRange) -> Result<QueryOutcome, RrdsError> {
        range.validate(self.config().max_degree)?;
        let compiled = range.compile();
        let grid = self.grid();
        let q = grid.q();
        let points = self.points();
        let mut scan = Scan {
            points,
            range: &compiled,
            visited: vec![0; points.len().div_ceil(64)],
            out: Vec::new(),
            stats: CostStats::default(),
        };
        let mut report = QueryReport::default();

        let mut boundary: Vec<usize> = Vec::new();
        for (i, part) in compiled.parts.iter().enumerate() {
            if part.poly.is_constant() {
                if !part.sign.holds(part.eval.eval(0.0, 0.0)) {
                    return Ok(QueryOutcome { ids: Vec::new(), stats: CostStats::default(), report });
                }
            } else {
                boundary.push(i);
            }
        }
        let signs: Vec<Vec<i8>> = boundary.iter().map(|&i| certify_cells(&compiled.parts[i].eval, &grid)).collect();
        let ncells = (q * q) as usize;
        let crossed: Vec<bool> = (0..ncells).map(|c| signs.iter().any(|s| s[c] == 0)).collect();
        report.crossed_cells = crossed.iter().filter(|&&c| c).count();

        // type-1 chunks
        for col in 0..q {
            let mut row = 0;
            while row < q {
                if crossed[(row * q + col) as usize] {
                    row += 1;
                    continue;
                }
                let start = row;
                while row < q && !crossed[(row * q + col) as usize] {
                    row += 1;
                }
                let first = (start * q + col) as usize;
                let inside = boundary.iter().zip(&signs).all(|(&i, s)| accepts(compiled.parts[i].sign, s[first]));
                let mut count = 0;
                for r in start..row {
                    let ids = self.bucket(Cell::new(r, col));
                    count += ids.len();
                    if inside {
                        scan.take(ids);
                    }
                }
                let verdict = if inside { Verdict::Inside } else { Verdict::Outside };
                report.regions.push(Region { kind: RegionKind::Chunk { col, row_lo: start, row_hi: row - 1 }, verdict, points: count });
            }
        }

        if report.crossed_cells > 0 {
            let mut per_cell: BTreeMap<usize, Vec<(usize, SubCurve)>> = BTreeMap::new();
            for (bi, &i) in boundary.iter().enumerate() {
                if signs[bi].iter().all(|&s| s != 0) {
                    continue;
                }
                let subs = refine_subcurves_with(&compiled.parts[i].poly, &grid, &RefineOptions::default())
                    .map_err(|source| RrdsError::Refine { factor: i, source })?;
                for sc in subs {
                    let c = cell_index(q, sc.owner_cell);
                    if crossed[c] {
                        per_cell.entry(c).or_default().push((i, sc));
                    }
                }
            }
            for c in (0..ncells).filter(|&c| crossed[c]) {
                let cell = Cell::new(c as u32 / q, c as u32 % q);
                let subs = per_cell.remove(&c).unwrap_or_default();
                report.subcurves += subs.len();
                self.crossed_cell(cell, subs, &compiled, &boundary, &signs, &mut scan, &mut report)?;
            }
        }

        let mut ids = scan.out;
        ids.sort_unstable();
        let mut stats = scan.stats;
        stats.output_size = ids.len() as u64;
        stats.regions_enumerated = report.regions.len() as u64;
        Ok(QueryOutcome { ids, stats, report })
    }

    fn cover_one(&self, sc: &SubCurve, part: &Part) -> Result<CellCover, crate::cover::CoverError> {
        let q = self.grid().q();
        let cell = cell_index(q, sc.owner_cell) as u32;
        let opts = &self.config().cover;
        match &self.catalog {
            Catalog::Rotated(cat) => {
                let c = cover_curvature(sc, cat, opts)?;
                let key = FamilyKey::Rotated { cell, angle: c.angle_index, level: c.level };
                Ok(CellCover { key, lo: c.lo as usize, hi: c.hi as usize, used: UsedCover::Rotated(c) })
            }
            Catalog::Islab(h) => {
                let c = cover_taylor(sc, &part.poly, h, h.max_level() as usize, opts)?;
                let key = FamilyKey::Poly { cell, guesses: c.family.guesses.clone() };
                let (lo, hi) = ((c.lo - c.family.k_min) as usize, (c.hi - c.family.k_min) as usize);
                Ok(CellCover { key, lo, hi, used: UsedCover::Taylor(c) })
            }
        }
    }

    fn face_family(&self, key: &FamilyKey) -> Result<FaceFamily, RrdsError> {
        let q = self.grid().q();
        match (key, &self.catalog) {
            (FamilyKey::Rotated { cell, angle, level }, Catalog::Rotated(cat)) => {
                Ok(FaceFamily::Rotated(cat.family(Cell::new(cell / q, cell % q), *angle, *level)))
            }
            (FamilyKey::Poly { cell, guesses }, Catalog::Islab(h)) => {
                let f = h.family(Cell::new(cell / q, cell % q), guesses)?;
                let h = 1.0 / q as f64;
                let mut lip = 0.0;
                let mut term = 1.0;
                for (j, a) in f.alphas.iter().enumerate() {
                    if j > 0 {
                        term *= h / j as f64;
                    }
                    lip += a.abs() * term;
                }
                Ok(FaceFamily::Poly(f, lip))
            }
            _ => Err(RrdsError::InvalidConfig("family kind does not match the structure's mode".into())),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn crossed_cell(
        &self,
        cell: Cell,
        subs: Vec<(usize, SubCurve)>,
        compiled: &CompiledRange,
        boundary: &[usize],
        signs: &[Vec<i8>],
        scan: &mut Scan<'_>,
        report: &mut QueryReport,
    ) -> Result<(), RrdsError> {
        let bucket = self.bucket(cell);
        let mut covers: Vec<CellCover> = Vec::with_capacity(subs.len());
        let mut failed = subs.is_empty();
        for (i, sc) in &subs {
            match self.cover_one(sc, &compiled.parts[*i]) {
                Ok(c) => covers.push(c),
                Err(source) if self.config().strict => {
                    return Err(RrdsError::Cover { subcurve: Box::new(sc.clone()), source });
                }
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            report.fallback_cells += usize::from(!subs.is_empty());
            scan.test(bucket);
            report.regions.push(Region { kind: RegionKind::Cell { cell }, verdict: Verdict::Scanned, points: bucket.len() });
            return Ok(());
        }

        let mut lists: Vec<std::sync::Arc<StripLists>> = Vec::with_capacity(covers.len());
        for c in &covers {
            let l = self.strip_lists(&c.key)?;
            for k in c.lo..=c.hi {
                scan.slab(l.strip(k));
            }
            report.cover_sizes.push(c.hi - c.lo + 1);
            lists.push(l);
        }

        // faces: runs of strips of the most used family outside its covers
        let mut tally: Vec<(&FamilyKey, usize, usize)> = Vec::new();
        for (n, c) in covers.iter().enumerate() {
            match tally.iter_mut().find(|(k, _, _)| **k == c.key) {
                Some(t) => t.1 += 1,
                None => tally.push((&c.key, 1, n)),
            }
        }
        let &(key, _, first) = tally.iter().rev().max_by_key(|t| t.1).expect("at least one cover");
        let fam_lists = lists[first].clone();
        let count = fam_lists.len();
        let mut used = vec![false; count];
        for c in covers.iter().filter(|c| c.key == *key) {
            used[c.lo..=c.hi].iter_mut().for_each(|u| *u = true);
        }
        let geom = self.face_family(key)?;
        let grid = self.grid();
        let cell_rect = grid.cell_rect(cell);
        let depth = ((grid.side() / geom.width()).log2().ceil().max(0.0) as u32 + 4).min(MAX_FACE_DEPTH);
        let ci = cell_index(grid.q(), cell);
        let mut a = 0;
        while a < count {
            if used[a] {
                a += 1;
                continue;
            }
            let mut b = a;
            while b + 1 < count && !used[b + 1] {
                b += 1;
            }
            let ids: Vec<u32> = (a..=b).flat_map(|k| fam_lists.strip(k).iter().copied()).collect();
            let points = ids.len();
            let mut verdict = Verdict::Scanned;
            if scan.unvisited(&ids) > SMALL_FACE {
                let relevant = |r: &Rect| geom.relevant(r, a, b, count);
                let mut inside = Some(true);
                for (bi, &i) in boundary.iter().enumerate() {
                    let part = &compiled.parts[i];
                    let s = match signs[bi][ci] {
                        0 => certify_zero_free_where(&part.eval, &cell_rect, depth, &relevant).map(|s| s as i8),
                        s => Some(s),
                    };
                    match s {
                        Some(s) => inside = inside.map(|v| v && accepts(part.sign, s)),
                        None => {
                            inside = None;
                            break;
                        }
                    }
                }
                match inside {
                    Some(true) => {
                        scan.take(&ids);
                        verdict = Verdict::Inside;
                    }
                    Some(false) => verdict = Verdict::Outside,
                    None => {}
                }
            }
            if verdict == Verdict::Scanned {
                scan.test(&ids);
            }
            report.regions.push(Region { kind: RegionKind::Face { cell, lo: a as i64, hi: b as i64 }, verdict, points });
            a = b + 1;
        }
        report.covers.extend(covers.into_iter().map(|c| c.used));
        Ok(())
    }
}

/// The regions a query enumerates besides its covers.
pub fn remaining_regions(s: &RangeStructure, range: &QueryRange) -> Result<Vec<Region>, RrdsError> {
    Ok(s.query_detailed(range)?.report.regions)
}
