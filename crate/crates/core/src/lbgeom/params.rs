use serde::{Deserialize, Serialize};

use super::LbError;
use crate::poly::monic_param_count;

/// The parameter schedule of the slab construction for given `n`, `Q`,
/// dimension `D` and degree `Δ`. Quantities that can leave the `f64` range
/// are also kept as base-2 logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LBParams {
    pub n: f64,
    pub q: f64,
    pub dim: u32,
    pub delta: u32,
    pub c_w: f64,
    /// `β = C(D + Δ, D) − 1`.
    pub beta: u64,
    /// `β_b`, the same count for `D = 2`.
    pub beta_b: u64,
    /// `C(β_b, 2)`.
    pub beta_bb: u64,
    pub w: f64,
    pub slab_delta: f64,
    pub eta: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub log2_epsilon: f64,
    pub log2_xi: f64,
    /// `log2 (ε/ξ_D)^β`, the size of the coefficient grid.
    pub log2_family_size: f64,
    /// Exponent `e` of the space bound `n^β / Q^e`.
    pub bound_exponent: u64,
    /// Growth of the family size in `n` with the subpolynomial factor fixed.
    pub n_exponent: f64,
    /// `ητ / (1/ε)^{1/β̈}`, which the distance requirement keeps bounded.
    pub distant_ratio: f64,
    pub warnings: Vec<String>,
}

impl LBParams {
    /// `ε/(2ξ_D)`, the smallest grid step index.
    pub fn grid_low(&self) -> f64 {
        (self.log2_epsilon - self.log2_xi - 1.0).exp2()
    }
}

/// `log2 (ε/ξ_D)` for the schedule with `log2 τ` given explicitly.
pub fn eps_over_xi(n: f64, q: f64, dim: u32, delta: u32, c_w: f64, log2_tau: f64) -> f64 {
    let bbb = bb(delta) as f64;
    let lq = q.log2();
    let lw = c_w.log2() + lq - n.log2();
    let ldelta = lw + bbb * lq;
    let leps = -bbb * (lq + log2_tau);
    let lift = ((dim - 2) * delta) as f64;
    let lxi = ldelta + bbb * log2_tau + lift * (lq + log2_tau);
    leps - lxi
}

fn bb(delta: u32) -> u64 {
    let b = monic_param_count(2, delta);
    b * (b - 1) / 2
}

pub fn lb_parameters(n: f64, q: f64, dim: u32, delta: u32, c_w: f64) -> Result<LBParams, LbError> {
    if !(n >= 2.0) || !(q >= 1.0) || dim < 2 || delta < 1 || !(c_w > 0.0) {
        return Err(LbError::InvalidParams(format!(
            "need n ≥ 2, Q ≥ 1, D ≥ 2, Δ ≥ 1, c_w > 0; got n = {n}, Q = {q}, D = {dim}, Δ = {delta}, c_w = {c_w}"
        )));
    }
    let beta = monic_param_count(dim, delta);
    let beta_b = monic_param_count(2, delta);
    let beta_bb = bb(delta);
    let bbb = beta_bb as f64;
    let log_tau = n.log2().sqrt();
    let (lq, lw) = (q.log2(), c_w.log2() + q.log2() - n.log2());
    let log_delta = lw + bbb * lq;
    let log_eps = -bbb * (lq + log_tau);
    let lift = ((dim - 2) * delta) as f64;
    let log_xi = log_delta + bbb * log_tau + lift * (lq + log_tau);
    let log_ratio = log_eps - log_xi;
    let b = beta as f64;
    let n_exponent = b * (eps_over_xi(2.0 * n, q, dim, delta, c_w, log_tau) - eps_over_xi(n, q, dim, delta, c_w, log_tau));
    let bound_exponent = beta + 2 * beta * beta_bb + beta * ((dim - 2) * delta) as u64 - 1;

    let mut warnings = Vec::new();
    let epsilon = log_eps.exp2();
    let w = lw.exp2();
    if epsilon >= 0.25 {
        warnings.push(format!("ε = {epsilon:e} is not small"));
    }
    if lw >= log_eps - 2.0 {
        warnings.push(format!("w = {w:e} is not small against ε = {epsilon:e}"));
    }
    if log_ratio - 1.0 < 0.0 {
        warnings.push(format!("ε/(2ξ) = {:e} < 1, the coefficient grid is empty", (log_ratio - 1.0).exp2()));
    }
    if !epsilon.is_normal() || !log_xi.exp2().is_normal() {
        warnings.push("ε or ξ leaves the f64 range; use the log2 fields".into());
    }

    Ok(LBParams {
        n,
        q,
        dim,
        delta,
        c_w,
        beta,
        beta_b,
        beta_bb,
        w,
        slab_delta: log_delta.exp2(),
        eta: q,
        tau: log_tau.exp2(),
        epsilon,
        xi: log_xi.exp2(),
        log2_epsilon: log_eps,
        log2_xi: log_xi,
        log2_family_size: b * log_ratio,
        bound_exponent,
        n_exponent,
        distant_ratio: (lq + log_tau + log_eps / bbb).exp2(),
        warnings,
    })
}
