//! Implicit curves in the unit square: tracing, grid crossings, singular
//! points, curvature and sub-curve refinement.

mod certify;
mod curvature;
mod trace;
mod zeros;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::PolyError;

pub use certify::{certify_zero_free, certify_zero_free_where, zero_free_sign};
pub use curvature::{
    curvature_at, refine_subcurves, refine_subcurves_with, total_abs_curvature, traced_rows, RefineOptions,
    CURVATURE_BUDGET, DEFAULT_PIECE_CAP,
};
pub use trace::{crossed_cells, trace_aligned, trace_zero_set, Polyline};
pub use zeros::{common_zeros, singular_points, tangent_count_with_slope, DEDUP_DIST};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("polynomial vanishes identically")]
    Degenerate,
    #[error("the polynomials share a factor (resultant vanishes identically)")]
    SharedFactor,
    #[error("vanishing gradient at ({x}, {y})")]
    SingularSample { x: f64, y: f64 },
    #[error("cell ({}, {}) needs more than {cap} pieces", cell.row, cell.col)]
    PieceCap { cell: Cell, cap: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Axis-aligned closed rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Membership with the boundary widened by `tol`.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }

    pub fn quadrants(&self) -> [Rect; 4] {
        let [cx, cy] = self.center();
        [
            Rect::new(self.x0, self.y0, cx, cy),
            Rect::new(cx, self.y0, self.x1, cy),
            Rect::new(self.x0, cy, cx, self.y1),
            Rect::new(cx, cy, self.x1, self.y1),
        ]
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]]
    }
}

/// Grid cell `(row, col)`: `[col/q, (col+1)/q] × [row/q, (row+1)/q]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub fn new(row: u32, col: u32) -> Self {
        Cell { row, col }
    }
}

/// A `q × q` partition of the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    q: u32,
}

impl Grid {
    pub fn new(q: u32) -> Result<Self, CurveError> {
        if q < 2 {
            return Err(CurveError::InvalidArgument(format!("grid needs q ≥ 2, got {q}")));
        }
        Ok(Grid { q })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn side(&self) -> f64 {
        1.0 / self.q as f64
    }

    /// Column of `x`, clamped so that `x = 1` lands in the last column.
    pub fn col_of(&self, x: f64) -> u32 {
        ((x * self.q as f64).floor().max(0.0) as u32).min(self.q - 1)
    }

    pub fn row_of(&self, y: f64) -> u32 {
        self.col_of(y)
    }

    pub fn cell_of(&self, p: [f64; 2]) -> Cell {
        Cell::new(self.row_of(p[1]), self.col_of(p[0]))
    }

    /// Grid line coordinate `k/q`.
    pub fn line(&self, k: u32) -> f64 {
        if k == self.q {
            1.0
        } else {
            k as f64 / self.q as f64
        }
    }

    pub fn cell_rect(&self, c: Cell) -> Rect {
        Rect::new(self.line(c.col), self.line(c.row), self.line(c.col + 1), self.line(c.row + 1))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.q).flat_map(move |r| (0..self.q).map(move |c| Cell::new(r, c)))
    }

    /// Cells whose closed region lies within `tol` of `p`.
    pub fn cells_near(&self, p: [f64; 2], tol: f64) -> impl Iterator<Item = Cell> {
        let qf = self.q as f64;
        let span = |v: f64| {
            let lo = ((v - tol) * qf).floor().max(0.0) as u32;
            let hi = (((v + tol) * qf).floor().max(0.0) as u32).min(self.q - 1);
            lo.min(self.q - 1)..=hi
        };
        let rows = span(p[1]);
        let cols = span(p[0]);
        let inside = p[0] >= -tol && p[0] <= 1.0 + tol && p[1] >= -tol && p[1] <= 1.0 + tol;
        rows.flat_map(move |r| cols.clone().map(move |c| Cell::new(r, c))).filter(move |_| inside)
    }
}

/// A piece of a zero set confined to one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubCurve {
    pub owner_cell: Cell,
    pub samples: Vec<[f64; 2]>,
    /// Total absolute curvature in radians.
    pub kappa: f64,
    pub singular_free: bool,
}

impl SubCurve {
    pub fn start(&self) -> [f64; 2] {
        self.samples[0]
    }

    pub fn end(&self) -> [f64; 2] {
        *self.samples.last().expect("sub-curves are nonempty")
    }

    pub fn arc_length(&self) -> f64 {
        self.samples.windows(2).map(|w| dist(w[0], w[1])).sum()
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cells_tile_the_square() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.cell_of([1.0, 1.0]), Cell::new(3, 3));
        assert_eq!(g.cell_of([0.25, 0.0]), Cell::new(0, 1));
        assert_eq!(g.cell_rect(Cell::new(1, 2)), Rect::new(0.5, 0.25, 0.75, 0.5));
        assert_eq!(g.cells().count(), 16);
        assert!(Grid::new(1).is_err());
    }

    #[test]
    fn cells_near_a_corner() {
        let g = Grid::new(4).unwrap();
        let near: Vec<Cell> = g.cells_near([0.5, 0.5], 1e-9).collect();
        assert_eq!(near.len(), 4);
        let near: Vec<Cell> = g.cells_near([0.3, 0.6], 1e-9).collect();
        assert_eq!(near, vec![Cell::new(2, 1)]);
        assert_eq!(g.cells_near([1.0, 0.1], 1e-9).count(), 1);
        assert_eq!(g.cells_near([1.5, 0.1], 1e-9).count(), 0);
    }
}
