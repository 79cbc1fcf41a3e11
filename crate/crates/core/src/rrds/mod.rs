//! Range reporting over a grid of slab families.
//!
//! Points are bucketed by grid cell. A query refines the boundary of its
//! range into sub-curves, covers each with a few strips of one family and
//! scans those strips exactly. Whatever lies between the covers is
//! classified wholesale when a Taylor certificate proves that no boundary
//! passes through it, and scanned otherwise.

mod query;
mod structure;
pub mod suite;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::CoverError;
use crate::curve::{Cell, CurveError, SubCurve};
use crate::poly::{Bivariate, MultiPoly, PolyError};

pub use query::{remaining_regions, QueryOutcome, QueryReport, Region, RegionKind, UsedCover, Verdict};
pub use structure::{curvature_space_exponent, derivative_space_exponent, BuildConfig, RangeStructure, SpaceReport};

pub const DEFAULT_MAX_DEGREE: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RrdsError {
    #[error("point {index} = ({x}, {y}) lies outside the unit square")]
    PointOutOfSquare { index: usize, x: f64, y: f64 },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("refining boundary factor {factor} failed: {source}")]
    Refine { factor: usize, source: CurveError },
    #[error("covering a sub-curve in cell ({}, {}) failed: {source}", .subcurve.owner_cell.row, .subcurve.owner_cell.col)]
    Cover { subcurve: Box<SubCurve>, source: CoverError },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    CoverSetup(#[from] CoverError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Which side of a factor's zero set belongs to the range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Sign {
    pub fn holds(self, v: f64) -> bool {
        match self {
            Sign::Le => v <= 0.0,
            Sign::Ge => v >= 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub poly: MultiPoly,
    pub sign: Sign,
}

/// `a ≤ P ≤ b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabForm {
    pub poly: MultiPoly,
    pub a: f64,
    pub b: f64,
}

/// A conjunction of polynomial inequalities in the plane, optionally with a
/// slab `a ≤ P ≤ b`. Factors are expected to be irreducible.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryRange {
    #[serde(default)]
    pub factors: Vec<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slab: Option<SlabForm>,
}

impl QueryRange {
    pub fn new(factors: Vec<Factor>) -> Self {
        QueryRange { factors, slab: None }
    }

    pub fn single(poly: MultiPoly, sign: Sign) -> Self {
        QueryRange::new(vec![Factor { poly, sign }])
    }

    pub fn slab(poly: MultiPoly, a: f64, b: f64) -> Self {
        QueryRange { factors: Vec::new(), slab: Some(SlabForm { poly, a, b }) }
    }

    pub fn validate(&self, max_degree: u32) -> Result<(), RrdsError> {
        let mut polys: Vec<&MultiPoly> = self.factors.iter().map(|f| &f.poly).collect();
        if let Some(s) = &self.slab {
            if !(s.a < s.b) {
                return Err(RrdsError::InvalidRange(format!("slab needs a < b, got a = {}, b = {}", s.a, s.b)));
            }
            polys.push(&s.poly);
        }
        for p in polys {
            if p.dim() != 2 {
                return Err(RrdsError::InvalidRange(format!("factors must be bivariate, got dim {}", p.dim())));
            }
            if p.degree() > max_degree {
                return Err(RrdsError::InvalidRange(format!("degree {} exceeds {max_degree}", p.degree())));
            }
        }
        Ok(())
    }

    /// The range as a flat list of sign conditions; a slab contributes
    /// `P − a ≥ 0` and `P − b ≤ 0`.
    pub fn conjuncts(&self) -> Vec<Factor> {
        let mut out = self.factors.clone();
        if let Some(s) = &self.slab {
            let shifted = |c: f64| &s.poly - &MultiPoly::constant(2, c);
            out.push(Factor { poly: shifted(s.a), sign: Sign::Ge });
            out.push(Factor { poly: shifted(s.b), sign: Sign::Le });
        }
        out
    }

    pub fn compile(&self) -> CompiledRange {
        CompiledRange {
            parts: self
                .conjuncts()
                .into_iter()
                .map(|f| Part { eval: f.poly.to_bivariate(), poly: f.poly, sign: f.sign })
                .collect(),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.compile().contains(p)
    }
}

pub(crate) struct Part {
    pub(crate) poly: MultiPoly,
    pub(crate) eval: Bivariate,
    pub(crate) sign: Sign,
}

/// A range with its conjuncts prepared for fast evaluation. Both the
/// structure and the brute-force oracle decide membership through this
/// type, so boundary points are treated identically.
pub struct CompiledRange {
    pub(crate) parts: Vec<Part>,
}

impl CompiledRange {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.parts.iter().all(|part| part.sign.holds(part.eval.eval(p[0], p[1])))
    }
}

/// Work counters of one query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostStats {
    pub slabs_visited: u64,
    pub points_scanned: u64,
    pub regions_enumerated: u64,
    pub dedup_checks: u64,
    pub output_size: u64,
}

impl CostStats {
    pub fn overscan(&self) -> u64 {
        self.points_scanned - self.output_size
    }
}

/// How the structure covers boundary sub-curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    /// Rotated strips chosen by total absolute curvature.
    Curvature,
    /// Polynomial strips of level `delta − 1` for curves whose derivatives
    /// stay within `c`.
    Derivative { delta: u32, c: f64 },
}

impl Mode {
    pub fn derivative() -> Self {
        Mode::Derivative { delta: 3, c: 2.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Curvature => "curvature",
            Mode::Derivative { .. } => "derivative",
        }
    }
}

/// Ids of the points in `range`, by direct evaluation.
pub fn brute_force_query(points: &[[f64; 2]], range: &QueryRange) -> Vec<u32> {
    let compiled = range.compile();
    (0..points.len() as u32).filter(|&i| compiled.contains(points[i as usize])).collect()
}

pub(crate) fn cell_index(q: u32, c: Cell) -> usize {
    (c.row * q + c.col) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(cx: f64, cy: f64, r: f64) -> MultiPoly {
        MultiPoly::bivariate(&[
            (2, 0, 1.0),
            (1, 0, -2.0 * cx),
            (0, 2, 1.0),
            (0, 1, -2.0 * cy),
            (0, 0, cx * cx + cy * cy - r * r),
        ])
    }

    #[test]
    fn slab_expands_to_two_conditions() {
        let y = MultiPoly::var(2, 1);
        let r = QueryRange::slab(y, 0.2, 0.4);
        let c = r.conjuncts();
        assert_eq!(c.len(), 2);
        assert!(r.contains([0.9, 0.2]) && r.contains([0.1, 0.4]) && r.contains([0.5, 0.3]));
        assert!(!r.contains([0.5, 0.41]) && !r.contains([0.5, 0.1]));
    }

    #[test]
    fn validation() {
        let y = MultiPoly::var(2, 1);
        assert!(QueryRange::slab(y.clone(), 0.4, 0.2).validate(4).is_err());
        assert!(QueryRange::single(y.pow(5), Sign::Le).validate(4).is_err());
        assert!(QueryRange::single(MultiPoly::var(3, 0), Sign::Le).validate(4).is_err());
        assert!(QueryRange::single(disk(0.5, 0.5, 0.1), Sign::Le).validate(4).is_ok());
    }

    #[test]
    fn oracle_edge_cases() {
        assert!(brute_force_query(&[], &QueryRange::default()).is_empty());
        let pts = [[0.1, 0.1], [0.5, 0.5], [0.9, 0.2]];
        assert_eq!(brute_force_query(&pts, &QueryRange::default()), vec![0, 1, 2]);
        let a = Factor { poly: disk(0.5, 0.5, 0.5), sign: Sign::Le };
        let b = Factor { poly: MultiPoly::var(2, 0), sign: Sign::Ge };
        let ab = brute_force_query(&pts, &QueryRange::new(vec![a.clone(), b.clone()]));
        let ba = brute_force_query(&pts, &QueryRange::new(vec![b, a]));
        assert_eq!(ab, ba);
        assert_eq!(ab, vec![1, 2]);
    }

    #[test]
    fn json_shape() {
        let r = QueryRange::single(MultiPoly::var(2, 0), Sign::Ge);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\">=\""), "{s}");
        let back: QueryRange = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let m: Mode = serde_json::from_str(r#"{"kind":"derivative","delta":3,"c":2.0}"#).unwrap();
        assert_eq!(m, Mode::derivative());
    }
}
