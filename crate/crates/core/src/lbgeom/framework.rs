use serde::{Deserialize, Serialize};

/// `κ_c` in the exponent `2^{κ_c·c}`.
pub const KAPPA_C: f64 = 1.0;

/// Space lower bound `m·Q / (α·2^{κ_c·c})` for `m` ranges that each need
/// `Q` points and overlap in fewer than `c` points pairwise.
pub fn framework_bound(m: f64, q: f64, c: f64, alpha: f64) -> f64 {
    m * q / (alpha * (KAPPA_C * c).exp2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameworkBound {
    pub log2_value: f64,
    pub alpha: f64,
    pub c: f64,
}

/// The bound with `α = 2` and `c = 3k√log₂ n`, taking `log₂ m` so that
/// huge families stay representable.
pub fn rrfw_bound(log2_m: f64, q: f64, n: f64, k: u32) -> FrameworkBound {
    let alpha: f64 = 2.0;
    let c = 3.0 * k as f64 * n.log2().sqrt();
    FrameworkBound { log2_value: log2_m + q.log2() - alpha.log2() - KAPPA_C * c, alpha, c }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert_eq!(framework_bound(1024.0, 4.0, 3.0, 2.0), 256.0);
        let b = rrfw_bound(10.0, 4.0, 256.0, 1);
        assert!((b.c - 3.0 * 8f64.sqrt()).abs() < 1e-12);
        assert!((b.log2_value.exp2() - framework_bound(1024.0, 4.0, b.c, 2.0)).abs() < 1e-9);
    }
}
