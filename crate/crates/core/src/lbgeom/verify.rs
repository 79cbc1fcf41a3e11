use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derand::{axis_strip_family, derand_simulation, DerandOptions, DerandResult};
use super::framework::{rrfw_bound, FrameworkBound};
use super::measure::{base_measure, intlen_scaling, slab_measure, ScalingStudy};
use super::packed::{axis_distance, packed_family_sample, PackedPoly};
use super::params::{lb_parameters, LBParams};
use super::LbError;
use crate::poly::monic_param_count;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbVerifyConfig {
    pub n: f64,
    pub q: f64,
    pub dim: u32,
    pub delta: u32,
    pub c_w: f64,
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    pub eta_taus: Vec<f64>,
    /// Point count and richness threshold of the derandomization run.
    pub derand_n: usize,
    pub derand_t: usize,
    /// Strips per axis in the derandomization family.
    pub derand_strips: usize,
    /// Packed pairs and base points per pair in the slab-width check.
    pub width_pairs: usize,
    pub width_points: usize,
}

impl Default for LbVerifyConfig {
    fn default() -> Self {
        LbVerifyConfig {
            n: 65536.0,
            q: 4.0,
            dim: 2,
            delta: 2,
            c_w: 1.0,
            samples: super::DEFAULT_MC_SAMPLES,
            trials: 100,
            seed: 0,
            eta_taus: vec![4.0, 8.0, 16.0, 32.0],
            derand_n: 4096,
            derand_t: 12,
            derand_strips: 32,
            width_pairs: 100,
            width_points: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub params: LBParams,
    pub mode: String,
    pub estimates: Vec<NamedEstimate>,
    pub seed: u64,
    pub beta_table: Vec<(u32, u64)>,
    pub framework: FrameworkBound,
    pub scaling: ScalingStudy,
    pub derand: DerandResult,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.estimates.iter().all(|e| e.pass)
    }
}

/// Moderate coefficient scale for the geometric checks, where the
/// asymptotic schedule leaves the `f64` range.
const GEOM_EPSILON: f64 = 1e-3;
const GEOM_XI: f64 = 1e-5;

/// Ratio range of `axis_distance(P, P − r)/r` over grid samples.
pub fn width_ratios(
    dim: usize,
    degree: u32,
    r: f64,
    pairs: usize,
    points: usize,
    seed: u64,
) -> Result<(f64, f64), LbError> {
    let polys = packed_family_sample(dim, degree, GEOM_EPSILON, GEOM_XI, pairs, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut base = vec![0.0; dim - 1];
    for p in &polys {
        let shifted = p.shifted(r);
        for _ in 0..points {
            base.iter_mut().for_each(|v| *v = 1.0 + rng.gen::<f64>());
            let ratio = axis_distance(p, &shifted, &base)? / r;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok((lo, hi))
}

fn named(name: &str, value: f64, stderr: f64, bound: f64, pass: bool) -> NamedEstimate {
    NamedEstimate { name: name.into(), value, stderr, bound, pass }
}

/// Schedule audit, geometric estimates at moderate scale and the
/// derandomization run, collected into one report.
pub fn lbverify(cfg: &LbVerifyConfig) -> Result<VerificationReport, LbError> {
    let params = lb_parameters(cfg.n, cfg.q, cfg.dim, cfg.delta, cfg.c_w)?;
    let (dim, delta) = (cfg.dim as usize, cfg.delta);
    let mut est = Vec::new();

    let expected = params.beta + 2 * params.beta * params.beta_bb + params.beta * ((cfg.dim - 2) * delta) as u64 - 1;
    est.push(named("bound_exponent", params.bound_exponent as f64, 0.0, expected as f64, params.bound_exponent == expected));
    est.push(named("distant_ratio", params.distant_ratio, 0.0, 1.0, (params.distant_ratio - 1.0).abs() < 1e-9));
    est.push(named("n_exponent", params.n_exponent, 0.0, params.beta as f64, (params.n_exponent - params.beta as f64).abs() < 1e-6));

    for (i, r) in [1e-4, 1e-3].into_iter().enumerate() {
        let (lo, hi) = width_ratios(dim, delta, r, cfg.width_pairs, cfg.width_points, cfg.seed + i as u64)?;
        est.push(named(&format!("width_ratio_min_r{r:e}"), lo, 0.0, 0.5, lo >= 0.5));
        est.push(named(&format!("width_ratio_max_r{r:e}"), hi, 0.0, 2.0, hi <= 2.0));
    }

    let pure = PackedPoly::pure(dim, delta)?;
    let b = base_measure(&pure, cfg.samples, cfg.seed)?;
    let exact = (1.0 / delta as f64).exp2() - 1.0;
    est.push(named("base_measure", b.value, b.stderr, exact, (b.value - exact).abs() <= 4.0 * b.stderr + 1e-3));

    let sample = packed_family_sample(dim, delta, GEOM_EPSILON, GEOM_XI, 1, cfg.seed)?.remove(0);
    let s = slab_measure(&sample, 1e-3, cfg.samples, cfg.seed)?;
    let ratio = s.value / 1e-3;
    est.push(named("slab_measure_over_width", ratio, s.stderr / 1e-3, 4.0, (0.25..=4.0).contains(&ratio)));

    let scaling = intlen_scaling(delta, 1, &cfg.eta_taus, cfg.samples, cfg.seed)?;
    est.push(named("intlen_slope", scaling.slope, 0.0, -1.0, (scaling.slope + 1.0).abs() <= 0.3));
    est.push(named("intlen_constant", scaling.fitted_c, 0.0, f64::INFINITY, scaling.fitted_c.is_finite()));
    est.push(named("intlen_inversions", scaling.inversions as f64, 0.0, 1.0, scaling.inversions <= 1));

    let nf = cfg.derand_n as f64;
    let ranges = 2 * cfg.derand_strips;
    let c = (ranges as f64).ln() / nf.ln();
    // 10% above the required measure
    let width = 1.1 * 4.0 * c * cfg.derand_t as f64 / nf;
    let family = axis_strip_family(cfg.derand_strips, width);
    let derand = derand_simulation(&family, cfg.derand_n, cfg.derand_t, cfg.trials, cfg.seed, &DerandOptions::default())?;
    est.push(named("derand_joint", derand.joint, 0.0, 0.5, derand.joint > 0.5));
    est.push(named("derand_preconditions", f64::from(u8::from(derand.measures_ok && derand.intersections_ok)), 0.0, 1.0, derand.measures_ok && derand.intersections_ok));

    Ok(VerificationReport {
        framework: rrfw_bound(params.log2_family_size, cfg.q, cfg.n, 1),
        beta_table: (1..=5).map(|d| (d, monic_param_count(2, d))).collect(),
        params,
        mode: "audit+geometry".into(),
        estimates: est,
        seed: cfg.seed,
        scaling,
        derand,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let cfg = LbVerifyConfig { samples: 20_000, trials: 20, width_pairs: 10, width_points: 100, ..Default::default() };
        let r = lbverify(&cfg).unwrap();
        assert!(r.passed(), "{:#?}", r.estimates);
        assert_eq!(r.params.bound_exponent, 104);
        assert_eq!(r.beta_table.iter().map(|b| b.1).collect::<Vec<_>>(), vec![2, 5, 9, 14, 20]);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["estimates"].as_array().unwrap().iter().all(|e| e.get("stderr").is_some()));
    }

    #[test]
    fn three_dimensional_widths() {
        let (lo, hi) = width_ratios(3, 2, 1e-4, 5, 200, 1).unwrap();
        assert!(lo >= 0.5 && hi <= 2.0, "{lo} {hi}");
    }
}
