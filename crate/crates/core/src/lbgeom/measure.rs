use serde::{Deserialize, Serialize};

use super::packed::{axis_distance, axis_root, packed_family_sample, PackedPoly};
use super::{loglog_slope, mc_mean, Estimate, LbError};

pub const DEFAULT_MC_SAMPLES: usize = 200_000;

/// Points count as close when their axis distance is at most `C_m·w`.
pub const DEFAULT_C_M: f64 = 4.0;

/// Fraction of `p ∈ [1, 2]^{D−1}` where the roots of `P1` and `P2` are
/// within `C_m·w` of each other.
pub fn close_region_measure(
    p1: &PackedPoly,
    p2: &PackedPoly,
    w: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate, LbError> {
    if !(w > 0.0) {
        return Err(LbError::InvalidParams(format!("w must be positive, got {w}")));
    }
    let limit = DEFAULT_C_M * w;
    mc_mean(samples, p1.dim() - 1, seed, |p| Ok(f64::from(u8::from(axis_distance(p1, p2, p)? <= limit))))
}

/// Fraction of `p ∈ [1, 2]^{D−1}` whose root lies in `[1, 2]`.
pub fn base_measure(poly: &PackedPoly, samples: usize, seed: u64) -> Result<Estimate, LbError> {
    let hi = poly.default_bracket();
    mc_mean(samples, poly.dim() - 1, seed, |p| {
        let a = axis_root(poly, p, hi)?;
        Ok(f64::from(u8::from((1.0..=2.0).contains(&a))))
    })
}

/// Volume of `{0 ≤ P ≤ r} ∩ [1, 2]^D`, averaging the exact fibre length
/// over random base points.
pub fn slab_measure(poly: &PackedPoly, r: f64, samples: usize, seed: u64) -> Result<Estimate, LbError> {
    if !(r > 0.0) {
        return Err(LbError::InvalidParams(format!("slab width must be positive, got {r}")));
    }
    let top = poly.shifted(r);
    let hi = top.default_bracket();
    mc_mean(samples, poly.dim() - 1, seed, |p| {
        let a = axis_root(poly, p, hi)?;
        let b = axis_root(&top, p, hi)?;
        Ok((b.min(2.0) - a.max(1.0)).max(0.0))
    })
}

/// Grid sample `P1` and `P2 = P1 + s·ξ·h`, where `h` vanishes along the
/// zero set of `P1` to the given order near `X_2 = 3/2`: `h = X_2 − 3/2`
/// for order 1 and `h = X_1 − 3X_2 + 9/4` for order 2 (quadratics only).
pub fn transversal_pair(
    degree: u32,
    order: u32,
    epsilon: f64,
    xi: f64,
    scale: f64,
    seed: u64,
) -> Result<(PackedPoly, PackedPoly), LbError> {
    let s = scale * xi;
    let terms = match order {
        1 => vec![(vec![0, 1], s), (vec![0, 0], -1.5 * s)],
        2 if degree == 2 => vec![(vec![1, 0], s), (vec![0, 1], -3.0 * s), (vec![0, 0], 2.25 * s)],
        _ => return Err(LbError::InvalidParams(format!("no pair of order {order} for degree {degree}"))),
    };
    if scale < 1.0 {
        return Err(LbError::InvalidParams(format!("scale {scale} < 1 breaks the distance requirement")));
    }
    let p1 = packed_family_sample(2, degree, epsilon, xi, 1, seed)?.remove(0);
    let p2 = p1.perturbed(&terms)?;
    debug_assert!(p1.is_distant(&p2, xi));
    Ok((p1, p2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eta_tau: f64,
    pub w: f64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub degree: u32,
    pub order: u32,
    pub epsilon: f64,
    pub xi: f64,
    pub rows: Vec<ScalingRow>,
    pub slope: f64,
    /// `max ητ·estimate`, so every estimate is at most `C/(ητ)`.
    pub fitted_c: f64,
    /// Adjacent pairs where the estimate grows with `ητ`.
    pub inversions: usize,
}

/// Close-region measure of one distant pair of the given vanishing order in
/// the plane with `w = ξ/(ητ)^order`, for each `ητ`. Order 2 uses a smaller
/// `ε` since the perturbation splits the double zero by about `√ε`.
pub fn intlen_scaling(
    degree: u32,
    order: u32,
    eta_taus: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ScalingStudy, LbError> {
    const SCALE: f64 = 8.0;
    let epsilon = if order == 1 { 1e-3 } else { 1e-6 };
    let xi = epsilon / 100.0;
    if eta_taus.len() < 2 || eta_taus.iter().any(|&v| !(v > 1.0)) {
        return Err(LbError::InvalidParams("need at least two values ητ > 1".into()));
    }
    let (p1, p2) = transversal_pair(degree, order, epsilon, xi, SCALE, seed)?;
    let mut rows = Vec::with_capacity(eta_taus.len());
    for (i, &et) in eta_taus.iter().enumerate() {
        let w = xi / et.powi(order as i32);
        let e = close_region_measure(&p1, &p2, w, samples, seed.wrapping_add(1 + i as u64))?;
        rows.push(ScalingRow { eta_tau: et, w, estimate: e.value, stderr: e.stderr });
    }
    if let Some(r) = rows.iter().find(|r| r.estimate == 0.0) {
        return Err(LbError::Precondition(format!("no close points at ητ = {}; raise the sample count", r.eta_tau)));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eta_tau).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    Ok(ScalingStudy {
        degree,
        order,
        epsilon,
        xi,
        slope: loglog_slope(&xs, &ys),
        fitted_c: rows.iter().map(|r| r.estimate * r.eta_tau).fold(0.0, f64::max),
        inversions: ys.windows(2).filter(|w| w[1] > w[0]).count(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_measure_of_the_parabola() {
        let p = PackedPoly::pure(2, 2).unwrap();
        let e = base_measure(&p, 50_000, 1).unwrap();
        assert!((e.value - (2f64.sqrt() - 1.0)).abs() < 4.0 * e.stderr + 1e-3, "{e:?}");
    }

    #[test]
    fn slab_measure_tracks_width() {
        let p = PackedPoly::pure(3, 2).unwrap();
        for r in [1e-3, 1e-2] {
            let m = slab_measure(&p, r, 20_000, 2).unwrap();
            let base = base_measure(&p, 20_000, 2).unwrap();
            let ratio = m.value / r;
            assert!((0.25..=4.0).contains(&ratio), "{ratio}");
            assert!((ratio - base.value).abs() < 0.05, "{ratio} vs {base:?}");
        }
    }

    #[test]
    fn transversal_close_region_is_one_over_eta_tau() {
        let s = intlen_scaling(2, 1, &[4.0, 8.0, 16.0, 32.0], 40_000, 5).unwrap();
        assert!((s.slope + 1.0).abs() < 0.1, "{s:?}");
        assert!(s.inversions == 0);
        assert!((s.fitted_c - 1.0).abs() < 0.1, "{s:?}");
    }

    #[test]
    fn tangential_pair_has_the_same_law() {
        let s = intlen_scaling(2, 2, &[4.0, 8.0, 16.0, 32.0], 40_000, 6).unwrap();
        assert!((s.slope + 1.0).abs() < 0.3, "{s:?}");
    }

    #[test]
    fn pair_construction_limits() {
        assert!(transversal_pair(3, 2, 1e-3, 1e-5, 8.0, 0).is_err());
        assert!(transversal_pair(2, 1, 1e-3, 1e-5, 0.5, 0).is_err());
        let (a, b) = transversal_pair(3, 1, 1e-3, 1e-5, 8.0, 0).unwrap();
        assert!(a.is_distant(&b, 1e-5));
    }

    #[test]
    fn identical_polynomials_are_everywhere_close() {
        let p = PackedPoly::pure(2, 2).unwrap();
        let e = close_region_measure(&p, &p, 1e-6, 1000, 0).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(close_region_measure(&p, &p, 0.0, 1000, 0).is_err());
    }
}
