//! Numerical checks of the packed-polynomial slab construction: parameter
//! schedules, axis distances, Monte Carlo measures, a derandomization
//! simulation and the counting bound.

mod derand;
mod framework;
mod measure;
mod packed;
mod params;
mod verify;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use derand::{axis_strip_family, derand_simulation, DerandOptions, DerandResult, Range};
pub use framework::{framework_bound, rrfw_bound, FrameworkBound, KAPPA_C};
pub use measure::{
    base_measure, close_region_measure, intlen_scaling, slab_measure, transversal_pair, ScalingRow, ScalingStudy,
    DEFAULT_C_M, DEFAULT_MC_SAMPLES,
};
pub use packed::{axis_distance, axis_root, index_set, packed_family_sample, PackedPoly, C_EPS, DEFAULT_BRACKET_HI};
pub use params::{eps_over_xi, lb_parameters, LBParams};
pub use verify::{lbverify, width_ratios, LbVerifyConfig, NamedEstimate, VerificationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LbError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("coefficient grid is empty: ε/(2ξ) = {ratio}")]
    EmptyGrid { ratio: f64 },
    #[error("not a packed polynomial: {0}")]
    NotPacked(String),
    #[error("no root in [{lo}, {hi}] above base point {p:?}")]
    RootOutsideBracket { p: Vec<f64>, lo: f64, hi: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Samples per independent random stream; the work split never depends on
/// the number of threads.
const CHUNK: usize = 4096;

/// Mean and standard error of `f` over `samples` uniform points of
/// `[1, 2]^dim`. Chunk `k` draws from stream `k` of the seed.
pub(crate) fn mc_mean<F>(samples: usize, dim: usize, seed: u64, f: F) -> Result<Estimate, LbError>
where
    F: Fn(&[f64]) -> Result<f64, LbError> + Sync,
{
    if samples == 0 {
        return Err(LbError::InvalidParams("need at least one sample".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = CHUNK.min(samples - k * CHUNK);
            let mut p = vec![0.0; dim];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for v in p.iter_mut() {
                    *v = 1.0 + rng.gen::<f64>();
                }
                let v = f(&p)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect::<Result<_, LbError>>()?;
    let n = samples as f64;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let mean = s / n;
    let var = if samples > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(Estimate { value: mean, stderr: (var / n).sqrt() })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mc_mean_is_thread_count_independent() {
        let f = |p: &[f64]| Ok(p[0] * p[1]);
        let a = mc_mean(10_000, 2, 7, f).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| mc_mean(10_000, 2, 7, f).unwrap());
        assert_eq!(a, b);
        // E[xy] over [1,2]² is 9/4
        assert!((a.value - 2.25).abs() < 4.0 * a.stderr);
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 / x).collect();
        assert!((loglog_slope(&xs, &ys) + 1.0).abs() < 1e-12);
    }
}
