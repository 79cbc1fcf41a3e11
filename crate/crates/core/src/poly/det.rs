//! Determinants, Vandermonde products and Schur polynomials.

use serde::{Deserialize, Serialize};

use super::PolyError;

/// Default budget for semistandard tableau enumeration.
pub const DEFAULT_TABLEAU_CAP: u64 = 10_000_000;

/// Determinant of a row-major `n × n` matrix by Gaussian elimination with
/// partial pivoting.
pub fn determinant(a: &[f64], n: usize) -> f64 {
    assert_eq!(a.len(), n * n, "matrix must be n × n");
    assert!(n <= 64, "determinants are limited to n ≤ 64");
    if n == 0 {
        return 1.0;
    }
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
        }
    }
    det
}

/// `Π_{i<j} (x_j − x_i)`.
pub fn vandermonde_det(xs: &[f64]) -> f64 {
    let mut p = 1.0;
    for j in 0..xs.len() {
        for i in 0..j {
            p *= xs[j] - xs[i];
        }
    }
    p
}

/// A weakly decreasing tuple of natural numbers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self, PolyError> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(PolyError::NotAPartition);
        }
        Ok(Partition(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of nonzero parts.
    pub fn length(&self) -> usize {
        self.0.iter().filter(|&&p| p > 0).count()
    }

    /// `|λ|`, the number of boxes.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Parts padded with zeros to `n` entries.
    fn padded(&self, n: usize) -> Result<Vec<u32>, PolyError> {
        if self.length() > n {
            return Err(PolyError::PartitionTooLong { parts: self.length(), vars: n });
        }
        let mut v: Vec<u32> = self.0.iter().copied().filter(|&p| p > 0).collect();
        v.resize(n, 0);
        Ok(v)
    }
}

struct TableauWalk<'a> {
    shape: &'a [u32],
    xs: &'a [f64],
    cells: Vec<(usize, usize)>,
    fill: Vec<Vec<usize>>,
    count: u64,
    cap: u64,
    sum: f64,
}

impl TableauWalk<'_> {
    fn run(&mut self, idx: usize, weight: f64) -> Result<(), PolyError> {
        if idx == self.cells.len() {
            self.count += 1;
            if self.count > self.cap {
                return Err(PolyError::EnumerationBudget { cap: self.cap });
            }
            self.sum += weight;
            return Ok(());
        }
        let (r, c) = self.cells[idx];
        let n = self.xs.len();
        // rows weakly increase, columns strictly increase
        let lo_row = if c > 0 { self.fill[r][c - 1] } else { 1 };
        let lo_col = if r > 0 { self.fill[r - 1][c] + 1 } else { 1 };
        let lo = lo_row.max(lo_col);
        for v in lo..=n {
            // entries below still need room to strictly increase
            let rows_below = self.shape[r + 1..].iter().take_while(|&&len| len as usize > c).count();
            if v + rows_below > n {
                break;
            }
            self.fill[r][c] = v;
            self.run(idx + 1, weight * self.xs[v - 1])?;
        }
        Ok(())
    }
}

fn enumerate_tableaux(lambda: &Partition, xs: &[f64], cap: u64) -> Result<(u64, f64), PolyError> {
    let shape = lambda.padded(xs.len())?;
    let cells: Vec<(usize, usize)> = shape
        .iter()
        .enumerate()
        .flat_map(|(r, &len)| (0..len as usize).map(move |c| (r, c)))
        .collect();
    let fill = shape.iter().map(|&len| vec![0; len as usize]).collect();
    let mut walk = TableauWalk { shape: &shape, xs, cells, fill, count: 0, cap, sum: 0.0 };
    walk.run(0, 1.0)?;
    Ok((walk.count, walk.sum))
}

/// Schur polynomial `s_λ(x_1, ..., x_n)` summed over all semistandard Young
/// tableaux of shape `λ` with entries in `1..=n`.
pub fn schur(lambda: &Partition, xs: &[f64]) -> Result<f64, PolyError> {
    schur_with_cap(lambda, xs, DEFAULT_TABLEAU_CAP)
}

pub fn schur_with_cap(lambda: &Partition, xs: &[f64], cap: u64) -> Result<f64, PolyError> {
    enumerate_tableaux(lambda, xs, cap).map(|(_, s)| s)
}

/// Number of semistandard tableaux of shape `λ` with entries in `1..=n`.
pub fn tableau_count(lambda: &Partition, n: usize) -> Result<u64, PolyError> {
    let ones = vec![1.0; n];
    enumerate_tableaux(lambda, &ones, DEFAULT_TABLEAU_CAP).map(|(c, _)| c)
}

/// Determinant of the generalized Vandermonde matrix
/// `V*_{ij} = x_i^{λ_{n−j+1} + j − 1}` (one-based indices).
pub fn gen_vandermonde_det(lambda: &Partition, xs: &[f64]) -> Result<f64, PolyError> {
    let n = xs.len();
    let lam = lambda.padded(n)?;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let e = lam[n - 1 - j] as i32 + j as i32;
            m[i * n + j] = xs[i].powi(e);
        }
    }
    Ok(determinant(&m, n))
}

/// `C(D + Δ, D) − 1`: free coefficients of a monic degree-`Δ` polynomial in
/// `D` variables.
pub fn monic_param_count(dim: u32, degree: u32) -> u64 {
    binomial(dim as u64 + degree as u64, dim as u64) - 1
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn part(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn vandermonde_examples() {
        assert_eq!(vandermonde_det(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(vandermonde_det(&[7.5]), 1.0);
        assert_eq!(vandermonde_det(&[1.0, 1.0, 2.0]), 0.0);
    }

    #[test]
    fn schur_examples() {
        assert_eq!(schur(&part(&[0, 0, 0]), &[0.3, 1.7, 2.0]).unwrap(), 1.0);
        assert_eq!(schur(&part(&[1, 0]), &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(schur(&part(&[2, 0]), &[1.0, 1.0]).unwrap(), 3.0);
        // s_(1,1)(x1, x2, x3) = e_2
        let xs = [2.0, 3.0, 5.0];
        assert_eq!(schur(&part(&[1, 1]), &xs).unwrap(), 6.0 + 10.0 + 15.0);
    }

    #[test]
    fn schur_respects_budget() {
        let r = schur_with_cap(&part(&[3, 2, 1]), &[1.0; 4], 10);
        assert_eq!(r, Err(PolyError::EnumerationBudget { cap: 10 }));
        assert!(matches!(schur(&part(&[1, 1, 1]), &[1.0, 1.0]), Err(PolyError::PartitionTooLong { .. })));
    }

    #[test]
    fn tableau_counts_match_hook_content() {
        // hook-content formula values for small shapes
        assert_eq!(tableau_count(&part(&[2, 1]), 3).unwrap(), 8);
        assert_eq!(tableau_count(&part(&[2]), 2).unwrap(), 3);
        assert_eq!(tableau_count(&part(&[3, 3]), 3).unwrap(), 10);
    }

    #[test]
    fn partition_must_be_monotone() {
        assert_eq!(Partition::new(vec![1, 2]), Err(PolyError::NotAPartition));
    }

    #[test]
    fn gen_vandermonde_reduces_to_vandermonde() {
        let xs = [1.2, 1.9, 1.5, 1.05];
        let g = gen_vandermonde_det(&part(&[0, 0, 0, 0]), &xs).unwrap();
        assert!((g - vandermonde_det(&xs)).abs() <= 1e-12 * vandermonde_det(&xs).abs());
    }

    #[test]
    fn monic_param_count_examples() {
        assert_eq!(monic_param_count(2, 4), 14);
        assert_eq!(monic_param_count(2, 5), 20);
        assert_eq!(monic_param_count(2, 1), 2);
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant(&[], 0), 1.0);
        assert_eq!(determinant(&[0.0, 1.0, 1.0, 0.0], 2), -1.0);
        assert_eq!(determinant(&[2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 4.0], 3), 24.0);
    }

    proptest! {
        #[test]
        fn determinant_is_multilinear(
            a in prop::collection::vec(-1.0f64..1.0, 16),
            w in prop::collection::vec(-1.0f64..1.0, 4),
            v in prop::collection::vec(-1.0f64..1.0, 4),
            r in -3.0f64..3.0,
            col in 0usize..4,
        ) {
            let with = |c: &dyn Fn(usize) -> f64| {
                let mut m = a.clone();
                for i in 0..4 { m[i * 4 + col] = c(i); }
                determinant(&m, 4)
            };
            let lhs = with(&|i| r * w[i] + v[i]);
            let rhs = r * with(&|i| w[i]) + with(&|i| v[i]);
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }

        #[test]
        fn bialternant_identity(
            xs in prop::collection::vec(1.0f64..2.0, 1..=4),
            raw in prop::collection::vec(0u32..=3, 4),
        ) {
            let mut parts: Vec<u32> = raw[..xs.len()].to_vec();
            parts.sort_unstable_by(|a, b| b.cmp(a));
            let lam = Partition::new(parts).unwrap();
            let v = vandermonde_det(&xs);
            prop_assume!(v.abs() > 1e-6);
            let g = gen_vandermonde_det(&lam, &xs).unwrap();
            let s = schur(&lam, &xs).unwrap();
            prop_assert!(((g - v * s) / (v * s)).abs() <= 1e-9);
            // on [1, 2]^n the ratio sits between 1 and (#tableaux)·2^{|λ|}
            let count = tableau_count(&lam, xs.len()).unwrap() as f64;
            prop_assert!(s >= 1.0 - 1e-12 && s <= count * 2f64.powi(lam.size() as i32));
        }
    }
}
