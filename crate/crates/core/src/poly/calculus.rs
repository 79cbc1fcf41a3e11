use super::{MultiIndex, MultiPoly, PolyError, ZERO_TOL};

impl MultiPoly {
    /// Partial derivative along `axis`.
    pub fn partial_derivative(&self, axis: usize) -> Result<MultiPoly, PolyError> {
        if axis >= self.dim() {
            return Err(PolyError::AxisOutOfRange { axis, dim: self.dim() });
        }
        let mut out = MultiPoly::zero(self.dim());
        for (k, c) in self.terms() {
            let e = k.get(axis);
            if e == 0 {
                continue;
            }
            let mut ex = k.exponents().to_vec();
            ex[axis] -= 1;
            out.add_term(MultiIndex::new(ex), c * e as f64);
        }
        Ok(out)
    }

    /// Infallible partial derivative for internal callers with a known axis.
    pub fn d(&self, axis: usize) -> MultiPoly {
        self.partial_derivative(axis).expect("axis in range")
    }

    /// Substitutes `value` for `axis`, returning a `(dim - 1)`-variate
    /// polynomial. A univariate input yields a constant in one variable.
    pub fn restrict(&self, axis: usize, value: f64) -> Result<MultiPoly, PolyError> {
        if axis >= self.dim() {
            return Err(PolyError::AxisOutOfRange { axis, dim: self.dim() });
        }
        let out_dim = (self.dim() - 1).max(1);
        let mut out = MultiPoly::zero(out_dim);
        for (k, c) in self.terms() {
            let mut ex: Vec<u32> = k.exponents().to_vec();
            let e = ex.remove(axis);
            if ex.is_empty() {
                ex.push(0);
            }
            out.add_term(MultiIndex::new(ex), c * value.powi(e as i32));
        }
        Ok(out)
    }

    /// Re-expands the polynomial around `center`: the result `Q` satisfies
    /// `Q(u) = P(center + u)`, so its coefficients are scaled Taylor
    /// coefficients of `P` at `center`.
    pub fn shift(&self, center: &[f64]) -> MultiPoly {
        assert_eq!(center.len(), self.dim(), "shift center has the wrong dimension");
        let mut cur = self.clone();
        for (axis, &p) in center.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut next = MultiPoly::zero(self.dim());
            for (k, c) in cur.terms() {
                let e = k.get(axis);
                // (p + u)^e = Σ_j C(e, j) p^(e-j) u^j
                let mut binom = 1.0;
                for j in 0..=e {
                    let mut ex = k.exponents().to_vec();
                    ex[axis] = j;
                    next.add_term(MultiIndex::new(ex), c * binom * p.powi((e - j) as i32));
                    binom = binom * (e - j) as f64 / (j + 1) as f64;
                }
            }
            cur = next;
        }
        cur
    }

    /// Composes with the affine map `X_axis -> a·X_axis + b` on one axis.
    pub fn affine_axis(&self, axis: usize, a: f64, b: f64) -> MultiPoly {
        let mut center = vec![0.0; self.dim()];
        center[axis] = b;
        let shifted = self.shift(&center);
        let mut out = MultiPoly::zero(self.dim());
        for (k, c) in shifted.terms() {
            out.add_term(k.clone(), c * a.powi(k.get(axis) as i32));
        }
        out
    }
}

/// Derivatives `d^j y / dx^j`, `j = 1..=order`, of the implicit function
/// `y(x)` defined by `P(x, y) = 0` through `point`.
///
/// The curve is written locally as `y = y0 + Σ c_k t^k` with `x = x0 + t`;
/// the order-`k` coefficient of `P(x0 + t, y(t))` is linear in `c_k` with
/// slope `P_y(point)`, which gives the recursion.
pub fn implicit_derivatives(p: &MultiPoly, point: [f64; 2], order: usize) -> Result<Vec<f64>, PolyError> {
    if p.dim() != 2 {
        return Err(PolyError::WrongDimension { expected: 2, got: p.dim() });
    }
    let q = p.shift(&point);
    let residual = q.coefficient(&[0, 0]);
    if residual.abs() > ZERO_TOL {
        return Err(PolyError::NotOnCurve { residual: residual.abs() });
    }
    let py = q.coefficient(&[0, 1]);
    if py.abs() < ZERO_TOL {
        return Err(PolyError::VanishingPartial { value: py.abs() });
    }
    let deg_y = q.degree_in(1) as usize;
    let mut c = vec![0.0; order + 1];
    for k in 1..=order {
        c[k] = 0.0;
        // powers[b][t] = coefficient of t^t in v(t)^b, truncated at order k
        let mut powers = vec![vec![0.0; k + 1]; deg_y + 1];
        powers[0][0] = 1.0;
        for b in 1..=deg_y {
            for i in 0..=k {
                if powers[b - 1][i] == 0.0 {
                    continue;
                }
                for j in 1..=(k - i) {
                    powers[b][i + j] += powers[b - 1][i] * c[j];
                }
            }
        }
        let mut r = 0.0;
        for (key, coef) in q.terms() {
            let a = key.get(0) as usize;
            let b = key.get(1) as usize;
            if a <= k {
                r += coef * powers[b][k - a];
            }
        }
        c[k] = -r / py;
    }
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(order);
    for (k, ck) in c.iter().enumerate().skip(1) {
        fact *= k as f64;
        out.push(ck * fact);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle() -> MultiPoly {
        MultiPoly::bivariate(&[(2, 0, 1.0), (0, 2, 1.0), (0, 0, -1.0)])
    }

    #[test]
    fn partial_derivative_examples() {
        assert_eq!(circle().partial_derivative(0).unwrap(), MultiPoly::bivariate(&[(1, 0, 2.0)]));
        assert!(MultiPoly::constant(2, 5.0).partial_derivative(1).unwrap().is_zero());
        let p = MultiPoly::bivariate(&[(1, 0, 1.0), (0, 3, -1.0)]);
        assert_eq!(p.partial_derivative(1).unwrap(), MultiPoly::bivariate(&[(0, 2, -3.0)]));
        assert!(matches!(p.partial_derivative(2), Err(PolyError::AxisOutOfRange { .. })));
    }

    #[test]
    fn restrict_examples() {
        let p = MultiPoly::from_terms(3, [(&[1u32, 0, 0][..], 1.0), (&[0, 3, 0][..], -1.0), (&[0, 0, 1][..], 1.0)]);
        assert_eq!(p.restrict(2, 0.0).unwrap(), MultiPoly::bivariate(&[(1, 0, 1.0), (0, 3, -1.0)]));
        let xy = MultiPoly::bivariate(&[(1, 1, 1.0)]);
        assert_eq!(xy.restrict(1, 2.0).unwrap(), MultiPoly::univariate(&[0.0, 2.0]));
        assert!(xy.restrict(5, 0.0).is_err());
    }

    #[test]
    fn implicit_derivative_examples() {
        let d = implicit_derivatives(&circle(), [0.0, 1.0], 2).unwrap();
        assert!(d[0].abs() < 1e-15 && (d[1] + 1.0).abs() < 1e-15);

        let cubic = MultiPoly::bivariate(&[(0, 1, 1.0), (3, 0, -1.0)]);
        let d = implicit_derivatives(&cubic, [1.0, 1.0], 3).unwrap();
        assert_eq!(d, vec![3.0, 6.0, 6.0]);

        let line = MultiPoly::bivariate(&[(0, 1, 1.0), (1, 0, -1.0)]);
        assert_eq!(implicit_derivatives(&line, [0.3, 0.3], 2).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn implicit_derivative_errors() {
        assert!(matches!(
            implicit_derivatives(&circle(), [1.0, 0.0], 1),
            Err(PolyError::VanishingPartial { .. })
        ));
        assert!(matches!(implicit_derivatives(&circle(), [0.5, 0.5], 1), Err(PolyError::NotOnCurve { .. })));
    }

    #[test]
    fn implicit_derivatives_match_explicit_circle_branch() {
        // y = sqrt(1 - x^2): y' = -x/y, y'' = -1/y^3, y''' = -3x/y^5
        let x: f64 = 0.3;
        let y = (1.0 - x * x).sqrt();
        let d = implicit_derivatives(&circle(), [x, y], 3).unwrap();
        assert!((d[0] + x / y).abs() < 1e-12);
        assert!((d[1] + 1.0 / y.powi(3)).abs() < 1e-12);
        assert!((d[2] + 3.0 * x / y.powi(5)).abs() < 1e-11);
    }

    #[test]
    fn affine_axis_composes() {
        let p = MultiPoly::bivariate(&[(2, 1, 1.5), (0, 0, -0.25), (1, 0, 2.0)]);
        let q = p.affine_axis(0, 0.5, 0.2);
        for &(u, y) in &[(0.3, 0.7), (-1.0, 2.0)] {
            assert!((q.eval(&[u, y]) - p.eval(&[0.5 * u + 0.2, y])).abs() < 1e-12);
        }
    }

    fn arb_poly(dim: usize) -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec((prop::collection::vec(0u32..4, dim), -2.0f64..2.0), 1..8)
            .prop_map(move |ts| MultiPoly::from_terms(dim, ts.iter().map(|(e, c)| (e.as_slice(), *c))))
    }

    proptest! {
        #[test]
        fn restrict_then_evaluate_agrees(p in arb_poly(3), x in prop::collection::vec(-1.5f64..1.5, 3), axis in 0usize..3) {
            let r = p.restrict(axis, x[axis]).unwrap();
            let mut rest = x.clone();
            rest.remove(axis);
            prop_assert!((r.eval(&rest) - p.eval(&x)).abs() <= 1e-12 * (1.0 + p.l1_norm() * 20.0));
        }

        #[test]
        fn derivative_lowers_degree(p in arb_poly(2), axis in 0usize..2) {
            let d = p.partial_derivative(axis).unwrap();
            if !d.is_zero() {
                prop_assert!(d.degree() < p.degree());
            }
        }

        #[test]
        fn shift_preserves_values(p in arb_poly(2), c in prop::collection::vec(-1.0f64..1.0, 2), u in prop::collection::vec(-1.0f64..1.0, 2)) {
            let q = p.shift(&c);
            let direct = p.eval(&[c[0] + u[0], c[1] + u[1]]);
            prop_assert!((q.eval(&u) - direct).abs() <= 1e-10 * (1.0 + p.l1_norm() * 100.0));
        }
    }
}
