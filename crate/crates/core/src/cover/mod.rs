//! Slab families and covers of sub-curves by a few slabs.
//!
//! Two kinds of family live here. Rotated families tile a cell by parallel
//! strips at a lattice angle and a dyadic width. Polynomial families tile a
//! cell by strips between translates of a Taylor polynomial whose
//! derivatives at the cell's left edge sit on a guess lattice.

mod islab;
mod rotated;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::CurveError;
use crate::poly::PolyError;

pub use islab::{build_islab_hierarchy, cover_taylor, IslabHierarchy, PolyFamily, PolySlab, TaylorCover};
pub use rotated::{build_rotated_family, cover_curvature, RotatedCatalog, RotatedCover, RotatedFamily, RotatedSlab};

pub const DEFAULT_C_COVER: f64 = 4.0;
pub const DEFAULT_MAX_SLABS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("sub-curve curvature {kappa} exceeds π/4")]
    CurvatureTooLarge { kappa: f64 },
    #[error("sub-curve passes through a singular point")]
    NotSingularFree,
    #[error("no level covers the sub-curve with at most {cap} slabs")]
    NoCover { cap: usize },
    #[error("derivative of order {order} is {value}, outside [−{bound}, {bound}]")]
    DerivativeOutOfRange { order: usize, value: f64, bound: f64 },
    #[error("cover needs {count} slabs, more than {cap}")]
    TooManySlabs { count: usize, cap: usize },
    #[error("order {order} exceeds the hierarchy depth {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Calibration knobs shared by both cover algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverOptions {
    /// Width multiplier on `κ/q` when picking a rotated level.
    pub c_cover: f64,
    /// Largest accepted cover.
    pub max_slabs: usize,
    /// A sample closer than this fraction of a width to the edge of the
    /// selected strip range pulls in the neighbouring strip.
    pub pad_fraction: f64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions { c_cover: DEFAULT_C_COVER, max_slabs: DEFAULT_MAX_SLABS, pad_fraction: 0.25 }
    }
}

/// Either kind of slab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Slab {
    Rotated(RotatedSlab),
    Poly(PolySlab),
}

/// Membership of `p` in `slab`. Strips are closed below and open above
/// within their family, the outermost strips are unbounded towards the
/// outside, and the point must lie in the owner cell under the grid's
/// half-open cell rule. Siblings therefore partition the cell's points.
pub fn slab_contains(slab: &Slab, p: [f64; 2]) -> bool {
    match slab {
        Slab::Rotated(s) => s.contains(p),
        Slab::Poly(s) => s.contains(p),
    }
}

/// Counts of a slab catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogSummary {
    pub q: u32,
    pub levels: Vec<u32>,
    pub counts_per_level: Vec<f64>,
    pub total: f64,
}

/// Index of the strip holding `t` when strip `k` starts at `lo(k)` for
/// `k = 1..count`. The first strip extends down and the last one up.
pub(crate) fn strip_index(t: f64, count: i64, lo: impl Fn(i64) -> f64, guess: i64) -> i64 {
    let mut k = guess.clamp(0, count - 1);
    while k > 0 && t < lo(k) {
        k -= 1;
    }
    while k + 1 < count && t >= lo(k + 1) {
        k += 1;
    }
    k
}
