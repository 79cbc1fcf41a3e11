//! Curvature integration and refinement of a zero set into sub-curves.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;

use super::trace::trace_aligned;
use super::zeros::singular_points;
use super::{dist, Cell, CurveError, Grid, Rect, SubCurve};
use crate::poly::{Bivariate, MultiPoly};

/// Curvature allowed per refined sub-curve.
pub const CURVATURE_BUDGET: f64 = FRAC_PI_4;
pub const DEFAULT_PIECE_CAP: usize = 64;

struct Derivs {
    p: Bivariate,
    px: Bivariate,
    py: Bivariate,
    pxx: Bivariate,
    pxy: Bivariate,
    pyy: Bivariate,
    grad_floor: f64,
}

impl Derivs {
    fn new(p: &MultiPoly) -> Self {
        let (px, py) = (p.d(0), p.d(1));
        Derivs {
            p: p.to_bivariate(),
            pxx: px.d(0).to_bivariate(),
            pxy: px.d(1).to_bivariate(),
            pyy: py.d(1).to_bivariate(),
            px: px.to_bivariate(),
            py: py.to_bivariate(),
            grad_floor: 1e-10 * p.l1_norm().max(1.0),
        }
    }

    fn grad(&self, q: [f64; 2]) -> (f64, f64) {
        (self.px.eval(q[0], q[1]), self.py.eval(q[0], q[1]))
    }

    fn kappa(&self, q: [f64; 2]) -> Result<f64, CurveError> {
        let (fx, fy) = self.grad(q);
        let g2 = fx * fx + fy * fy;
        if g2.sqrt() <= self.grad_floor {
            return Err(CurveError::SingularSample { x: q[0], y: q[1] });
        }
        let (x, y) = (q[0], q[1]);
        let num = fx * fx * self.pyy.eval(x, y) - 2.0 * fx * fy * self.pxy.eval(x, y) + fy * fy * self.pxx.eval(x, y);
        Ok(num.abs() / g2.powf(1.5))
    }

    /// Newton steps along the gradient back onto the curve.
    fn project(&self, mut q: [f64; 2]) -> [f64; 2] {
        for _ in 0..6 {
            let v = self.p.eval(q[0], q[1]);
            if v == 0.0 {
                break;
            }
            let (fx, fy) = self.grad(q);
            let g2 = fx * fx + fy * fy;
            if g2 == 0.0 {
                break;
            }
            q = [q[0] - v * fx / g2, q[1] - v * fy / g2];
        }
        q
    }
}

/// Curvature `|P_x²P_yy − 2P_xP_yP_xy + P_y²P_xx| / |∇P|³` of `Z(P)` at `q`.
pub fn curvature_at(p: &MultiPoly, q: [f64; 2]) -> Result<f64, CurveError> {
    Derivs::new(p).kappa(q)
}

fn increments(d: &Derivs, samples: &[[f64; 2]]) -> Result<Vec<f64>, CurveError> {
    let k: Vec<f64> = samples.iter().map(|&q| d.kappa(q)).collect::<Result<_, _>>()?;
    Ok(samples.windows(2).zip(k.windows(2)).map(|(s, k)| 0.5 * (k[0] + k[1]) * dist(s[0], s[1])).collect())
}

/// `∫ |dθ/ds| ds` along the polyline, trapezoidal in arc length with the
/// exact curvature at each sample.
pub fn total_abs_curvature(samples: &[[f64; 2]], p: &MultiPoly) -> Result<f64, CurveError> {
    Ok(increments(&Derivs::new(p), samples)?.iter().sum())
}

/// Rows `(x, y, cumulative arc length, cumulative curvature)`.
pub fn traced_rows(samples: &[[f64; 2]], p: &MultiPoly) -> Result<Vec<[f64; 4]>, CurveError> {
    let inc = increments(&Derivs::new(p), samples)?;
    let mut arc = 0.0;
    let mut kap = 0.0;
    let mut out = Vec::with_capacity(samples.len());
    for (i, &q) in samples.iter().enumerate() {
        if i > 0 {
            arc += dist(samples[i - 1], q);
            kap += inc[i - 1];
        }
        out.push([q[0], q[1], arc, kap]);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineOptions {
    /// Trace step; `None` means `1/(64q)`.
    pub step: Option<f64>,
    pub piece_cap: usize,
    /// Curvature budget per piece; `None` cuts only at cells and singular
    /// points.
    pub curvature_budget: Option<f64>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { step: None, piece_cap: DEFAULT_PIECE_CAP, curvature_budget: Some(CURVATURE_BUDGET) }
    }
}

/// Splits a traced polyline into maximal runs inside one cell.
fn cell_runs(grid: &Grid, points: &[[f64; 2]], closed: bool) -> Vec<(Cell, Vec<[f64; 2]>)> {
    let mid_cell = |a: [f64; 2], b: [f64; 2]| grid.cell_of([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
    let mut pts = points.to_vec();
    if closed && pts.len() > 2 {
        // start a closed loop at a cell change so no run wraps around
        let n = pts.len() - 1;
        let cells: Vec<Cell> = (0..n).map(|i| mid_cell(pts[i], pts[i + 1])).collect();
        if let Some(k) = (0..n).find(|&i| cells[i] != cells[(i + n - 1) % n]) {
            let mut rot: Vec<[f64; 2]> = pts[k..n].to_vec();
            rot.extend_from_slice(&pts[..k]);
            rot.push(rot[0]);
            pts = rot;
        }
    }
    let mut runs: Vec<(Cell, Vec<[f64; 2]>)> = Vec::new();
    for w in pts.windows(2) {
        let c = mid_cell(w[0], w[1]);
        match runs.last_mut() {
            Some((rc, run)) if *rc == c => run.push(w[1]),
            _ => runs.push((c, vec![w[0], w[1]])),
        }
    }
    runs
}

fn refine_segments(d: &Derivs, cell: &Rect, run: Vec<[f64; 2]>, limit: f64) -> Result<Vec<[f64; 2]>, CurveError> {
    let mut pts = run;
    for _ in 0..12 {
        let inc = increments(d, &pts)?;
        if inc.iter().all(|&v| v <= limit) {
            break;
        }
        let mut next = Vec::with_capacity(pts.len() * 2);
        next.push(pts[0]);
        for (i, w) in pts.windows(2).enumerate() {
            if inc[i] > limit {
                let m = d.project([0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])]);
                if cell.contains(m, 1e-12) && d.kappa(m).is_ok() {
                    next.push(m);
                }
            }
            next.push(w[1]);
        }
        if next.len() == pts.len() {
            break;
        }
        pts = next;
    }
    Ok(pts)
}

/// Cuts `Z(P) ∩ [0, 1]²` at cell boundaries, around singular points and,
/// when a budget is set, greedily wherever the running curvature would
/// exceed it.
pub fn refine_subcurves_with(p: &MultiPoly, grid: &Grid, opts: &RefineOptions) -> Result<Vec<SubCurve>, CurveError> {
    let step = opts.step.unwrap_or(1.0 / (64.0 * grid.q() as f64));
    let lines = trace_aligned(p, &Rect::unit(), step, grid.q())?;
    if lines.is_empty() {
        return Ok(Vec::new());
    }
    let singular = singular_points(p, &Rect::unit())?;
    let keep_out = (2.0 * step).max(1e-6);
    let d = Derivs::new(p);
    let usable = |q: [f64; 2]| {
        let (fx, fy) = d.grad(q);
        fx.hypot(fy) > d.grad_floor && singular.iter().all(|&s| dist(s, q) > keep_out)
    };
    let mut out: Vec<SubCurve> = Vec::new();
    let mut per_cell: HashMap<Cell, usize> = HashMap::new();
    for line in &lines {
        for (cell, run) in cell_runs(grid, &line.points, line.closed) {
            let cell_rect = grid.cell_rect(cell);
            let mut pieces: Vec<Vec<[f64; 2]>> = Vec::new();
            let mut cur: Vec<[f64; 2]> = Vec::new();
            for q in run {
                if usable(q) {
                    cur.push(q);
                } else if !cur.is_empty() {
                    pieces.push(std::mem::take(&mut cur));
                }
            }
            pieces.push(cur);
            for piece in pieces.into_iter().filter(|p| p.len() >= 2) {
                let split = match opts.curvature_budget {
                    Some(budget) => {
                        let pts = refine_segments(&d, &cell_rect, piece, 0.5 * budget)?;
                        let inc = increments(&d, &pts)?;
                        let mut parts = Vec::new();
                        let mut start = 0;
                        let mut acc = 0.0;
                        for (i, v) in inc.iter().enumerate() {
                            if acc + v > budget && i > start {
                                parts.push((pts[start..=i].to_vec(), acc));
                                start = i;
                                acc = 0.0;
                            }
                            acc += v;
                        }
                        parts.push((pts[start..].to_vec(), acc));
                        parts
                    }
                    None => {
                        let k = increments(&d, &piece)?.iter().sum();
                        vec![(piece, k)]
                    }
                };
                for (samples, kappa) in split {
                    let n = per_cell.entry(cell).or_default();
                    *n += 1;
                    if *n > opts.piece_cap {
                        return Err(CurveError::PieceCap { cell, cap: opts.piece_cap });
                    }
                    out.push(SubCurve { owner_cell: cell, samples, kappa, singular_free: true });
                }
            }
        }
    }
    Ok(out)
}

pub fn refine_subcurves(p: &MultiPoly, grid: &Grid) -> Result<Vec<SubCurve>, CurveError> {
    refine_subcurves_with(p, grid, &RefineOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(cx: f64, cy: f64, r: f64) -> MultiPoly {
        MultiPoly::bivariate(&[
            (2, 0, 1.0),
            (1, 0, -2.0 * cx),
            (0, 2, 1.0),
            (0, 1, -2.0 * cy),
            (0, 0, cx * cx + cy * cy - r * r),
        ])
    }

    fn arc(r: f64, from: f64, to: f64, n: usize) -> Vec<[f64; 2]> {
        (0..=n)
            .map(|i| {
                let t = from + (to - from) * i as f64 / n as f64;
                [0.5 + r * t.cos(), 0.5 + r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn circle_arcs_have_expected_curvature() {
        let p = circle(0.5, 0.5, 0.3);
        let q = total_abs_curvature(&arc(0.3, 0.0, PI / 2.0, 200), &p).unwrap();
        assert!((q - PI / 2.0).abs() < 1e-3, "{q}");
        let full = total_abs_curvature(&arc(0.3, 0.0, 2.0 * PI, 800), &p).unwrap();
        assert!((full - 2.0 * PI).abs() < 1e-3, "{full}");
    }

    #[test]
    fn straight_segment_is_flat() {
        let p = MultiPoly::bivariate(&[(0, 1, 1.0), (1, 0, -0.5), (0, 0, -0.1)]);
        let pts: Vec<[f64; 2]> = (0..=10).map(|i| [i as f64 / 10.0, 0.1 + 0.05 * i as f64]).collect();
        assert_eq!(total_abs_curvature(&pts, &p).unwrap(), 0.0);
    }

    #[test]
    fn singular_sample_is_an_error() {
        let node = MultiPoly::bivariate(&[(2, 0, 1.0), (0, 2, -1.0)]);
        assert!(matches!(total_abs_curvature(&[[0.0, 0.0], [0.1, 0.1]], &node), Err(CurveError::SingularSample { .. })));
    }

    #[test]
    fn line_gives_one_flat_piece_per_cell() {
        let g = Grid::new(8).unwrap();
        let p = MultiPoly::bivariate(&[(0, 1, 1.0), (1, 0, -0.4), (0, 0, -0.31)]);
        let subs = refine_subcurves(&p, &g).unwrap();
        let cells = super::super::crossed_cells(&p, &g).unwrap();
        assert_eq!(subs.len(), cells.len());
        for s in &subs {
            assert_eq!(s.kappa, 0.0);
            assert!(cells.contains(&s.owner_cell));
        }
    }

    #[test]
    fn circle_splits_by_curvature() {
        let g = Grid::new(2).unwrap();
        let p = circle(0.5, 0.5, 0.4);
        let subs = refine_subcurves(&p, &g).unwrap();
        assert!(subs.len() >= 8);
        let total: f64 = subs.iter().map(|s| s.kappa).sum();
        assert!((total - 2.0 * PI).abs() < 1e-3);
        for s in &subs {
            assert!(s.kappa <= CURVATURE_BUDGET + 1e-6);
            let r = g.cell_rect(s.owner_cell);
            assert!(s.samples.iter().all(|&q| r.contains(q, 1e-12)));
        }
    }

    #[test]
    fn missing_curve_refines_to_nothing() {
        let g = Grid::new(4).unwrap();
        assert!(refine_subcurves(&circle(5.0, 5.0, 1.0), &g).unwrap().is_empty());
    }

    #[test]
    fn pieces_avoid_singular_points() {
        let g = Grid::new(4).unwrap();
        let p = super::super::zeros::tests::nodal_cubic_at(0.3, 0.6);
        let subs = refine_subcurves(&p, &g).unwrap();
        assert!(!subs.is_empty());
        for s in &subs {
            assert!(s.samples.iter().all(|&q| dist(q, [0.3, 0.6]) > 1e-6));
            assert!(s.kappa <= CURVATURE_BUDGET + 1e-6);
        }
    }

    #[test]
    fn piece_cap_is_enforced() {
        let g = Grid::new(2).unwrap();
        let opts = RefineOptions { piece_cap: 1, ..RefineOptions::default() };
        let err = refine_subcurves_with(&circle(0.25, 0.25, 0.2), &g, &opts).unwrap_err();
        assert!(matches!(err, CurveError::PieceCap { cap: 1, .. }));
    }

    #[test]
    fn pieces_reassemble_the_trace() {
        let g = Grid::new(4).unwrap();
        let p = MultiPoly::bivariate(&[(0, 1, 1.0), (3, 0, -2.0), (2, 0, 2.5), (1, 0, -0.8), (0, 0, -0.2)]);
        let subs = refine_subcurves(&p, &g).unwrap();
        let step = 1.0 / 256.0;
        let trace_len: f64 = trace_aligned(&p, &Rect::unit(), step, 4).unwrap()[0].points.windows(2).map(|w| dist(w[0], w[1])).sum();
        let pieces_len: f64 = subs.iter().map(|s| s.arc_length()).sum();
        assert!((trace_len - pieces_len).abs() < 1e-3 * trace_len);
        for s in &subs {
            assert!(s.samples.windows(2).all(|w| dist(w[0], w[1]) <= step));
        }
    }
}
