//! Marching squares on certified-uncertain quadtree leaves.

use std::collections::{BTreeSet, HashMap};

use super::certify::zero_free_sign;
use super::{Cell, CurveError, Grid, Rect};
use crate::poly::{Bivariate, MultiPoly};

/// An ordered run of points on the zero set. Closed polylines repeat their
/// first point at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// From vertex `(i, j)` to `(i + 1, j)`.
    H(u32, u32),
    /// From vertex `(i, j)` to `(i, j + 1)`.
    V(u32, u32),
}

struct Lattice<'a> {
    b: &'a Bivariate,
    bx: Rect,
    nx: u32,
    ny: u32,
    values: HashMap<(u32, u32), f64>,
    roots: HashMap<EdgeKey, [f64; 2]>,
}

impl Lattice<'_> {
    fn x(&self, i: u32) -> f64 {
        if i == self.nx {
            self.bx.x1
        } else {
            self.bx.x0 + self.bx.width() * i as f64 / self.nx as f64
        }
    }

    fn y(&self, j: u32) -> f64 {
        if j == self.ny {
            self.bx.y1
        } else {
            self.bx.y0 + self.bx.height() * j as f64 / self.ny as f64
        }
    }

    fn value(&mut self, i: u32, j: u32) -> f64 {
        let (x, y) = (self.x(i), self.y(j));
        let b = self.b;
        *self.values.entry((i, j)).or_insert_with(|| b.eval(x, y))
    }

    fn positive(&mut self, i: u32, j: u32) -> bool {
        self.value(i, j) >= 0.0
    }

    fn root(&mut self, key: EdgeKey) -> [f64; 2] {
        if let Some(p) = self.roots.get(&key) {
            return *p;
        }
        let (a, b) = match key {
            EdgeKey::H(i, j) => ((i, j), (i + 1, j)),
            EdgeKey::V(i, j) => ((i, j), (i, j + 1)),
        };
        let pa = [self.x(a.0), self.y(a.1)];
        let pb = [self.x(b.0), self.y(b.1)];
        let sa = self.positive(a.0, a.1);
        let f = |t: f64| self.b.eval(pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]));
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if (f(mid) >= 0.0) == sa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
        let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        // keep edge points exactly on their grid line
        let p = match key {
            EdgeKey::H(..) => [p[0], pa[1]],
            EdgeKey::V(..) => [pa[0], p[1]],
        };
        self.roots.insert(key, p);
        p
    }
}

/// Leaves of the quadtree over `nx0 × ny0` top boxes that could not be
/// certified zero-free, as fine-lattice indices at depth `depth`.
fn candidate_leaves(b: &Bivariate, bx: &Rect, nx0: u32, ny0: u32, depth: u32) -> Vec<(u32, u32)> {
    let scale = 1u32 << depth;
    let (nx, ny) = (nx0 * scale, ny0 * scale);
    let xf = |i: u32| if i == nx { bx.x1 } else { bx.x0 + bx.width() * i as f64 / nx as f64 };
    let yf = |j: u32| if j == ny { bx.y1 } else { bx.y0 + bx.height() * j as f64 / ny as f64 };
    let mut out = Vec::new();
    let mut stack: Vec<(u32, u32, u32)> = Vec::new();
    for tj in 0..ny0 {
        for ti in 0..nx0 {
            stack.push((ti * scale, tj * scale, scale));
        }
    }
    while let Some((i, j, size)) = stack.pop() {
        let r = Rect::new(xf(i), yf(j), xf(i + size), yf(j + size));
        if zero_free_sign(b, &r).is_some() {
            continue;
        }
        if size == 1 {
            out.push((i, j));
        } else {
            let h = size / 2;
            stack.extend([(i, j, h), (i + h, j, h), (i, j + h, h), (i + h, j + h, h)]);
        }
    }
    out.sort_unstable_by_key(|&(i, j)| (j, i));
    out
}

/// Traces `Z(P) ∩ bx` with the top level split into `split × split` boxes,
/// so that every split line is also a line of the sampling lattice.
pub fn trace_aligned(p: &MultiPoly, bx: &Rect, step: f64, split: u32) -> Result<Vec<Polyline>, CurveError> {
    if p.dim() != 2 {
        return Err(crate::poly::PolyError::WrongDimension { expected: 2, got: p.dim() }.into());
    }
    if !(step > 0.0) || split == 0 {
        return Err(CurveError::InvalidArgument("step must be positive".into()));
    }
    if p.is_zero() {
        return Err(CurveError::Degenerate);
    }
    if p.is_constant() {
        return Ok(Vec::new());
    }
    let b = p.to_bivariate();
    let top = Rect::new(0.0, 0.0, bx.width() / split as f64, bx.height() / split as f64);
    let mut depth = 0;
    while top.diagonal() / (1u64 << depth) as f64 > step {
        depth += 1;
    }
    if depth > 20 {
        return Err(CurveError::InvalidArgument("step too small for the box".into()));
    }
    let leaves = candidate_leaves(&b, bx, split, split, depth);
    let mut lat = Lattice {
        b: &b,
        bx: *bx,
        nx: split << depth,
        ny: split << depth,
        values: HashMap::new(),
        roots: HashMap::new(),
    };
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for &(i, j) in &leaves {
        let s = [lat.positive(i, j), lat.positive(i + 1, j), lat.positive(i + 1, j + 1), lat.positive(i, j + 1)];
        let edges = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
        let crossing: Vec<usize> = (0..4).filter(|&e| s[e] != s[(e + 1) % 4]).collect();
        match crossing.len() {
            2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
            4 => {
                let cx = 0.5 * (lat.x(i) + lat.x(i + 1));
                let cy = 0.5 * (lat.y(j) + lat.y(j + 1));
                if (b.eval(cx, cy) >= 0.0) == s[0] {
                    segments.push((edges[0], edges[1]));
                    segments.push((edges[2], edges[3]));
                } else {
                    segments.push((edges[3], edges[0]));
                    segments.push((edges[1], edges[2]));
                }
            }
            _ => {}
        }
    }
    Ok(link(&mut lat, &segments))
}

fn link(lat: &mut Lattice<'_>, segments: &[(EdgeKey, EdgeKey)]) -> Vec<Polyline> {
    let mut adj: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(s);
        adj.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start: EdgeKey, first: usize, used: &mut Vec<bool>| {
        let mut keys = vec![start];
        let mut cur = start;
        let mut seg = Some(first);
        while let Some(s) = seg {
            used[s] = true;
            let (a, b) = segments[s];
            let next = if a == cur { b } else { a };
            keys.push(next);
            cur = next;
            seg = adj[&cur].iter().copied().find(|&t| !used[t]);
        }
        keys
    };
    // open chains start at keys of odd degree, in a fixed order
    let mut starts: Vec<EdgeKey> = Vec::new();
    for &(a, b) in segments {
        for k in [a, b] {
            if adj[&k].len() % 2 == 1 && !starts.contains(&k) {
                starts.push(k);
            }
        }
    }
    let mut chains = Vec::new();
    for k in starts {
        while let Some(first) = adj[&k].iter().copied().find(|&t| !used[t]) {
            chains.push((walk(k, first, &mut used), false));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let start = segments[s].0;
            let keys = walk(start, s, &mut used);
            let closed = keys.last() == Some(&start);
            chains.push((keys, closed));
        }
    }
    for (keys, closed) in chains {
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(keys.len());
        for k in keys {
            let p = lat.root(k);
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if pts.len() >= 2 {
            out.push(Polyline { points: pts, closed });
        }
    }
    out
}

/// Polylines approximating `Z(P) ∩ bx`: consecutive samples are at most
/// `step` apart and every sample is a bisected root on a lattice edge.
///
/// Curve pieces that never change the sign of `P` at lattice vertices
/// (tangential touches, loops smaller than a lattice cell) are not seen.
pub fn trace_zero_set(p: &MultiPoly, bx: &Rect, step: f64) -> Result<Vec<Polyline>, CurveError> {
    trace_aligned(p, bx, step, 1)
}

/// Cells whose closed region comes within `1e−9` of a traced sample.
pub fn crossed_cells(p: &MultiPoly, grid: &Grid) -> Result<BTreeSet<Cell>, CurveError> {
    let step = 1.0 / (64.0 * grid.q() as f64);
    let lines = trace_aligned(p, &Rect::unit(), step, grid.q())?;
    let mut out = BTreeSet::new();
    for l in &lines {
        for &pt in &l.points {
            out.extend(grid.cells_near(pt, 1e-9));
        }
    }
    Ok(out)
}
