//! Zero-freeness certificates from Taylor remainder bounds.

use super::Rect;
use crate::poly::Bivariate;

fn rounding_slack(b: &Bivariate, r: &Rect) -> f64 {
    let reach = 1.0 + r.x0.abs().max(r.x1.abs()) + r.y0.abs().max(r.y1.abs());
    1e-12 * b.l1_norm() * reach.powi(b.degree() as i32)
}

/// The sign of `P` on `r` when a single Taylor bound at the center proves
/// that `P` has no zero on the closed box.
pub fn zero_free_sign(b: &Bivariate, r: &Rect) -> Option<f64> {
    let [cx, cy] = r.center();
    let (v, var) = b.value_and_variation(cx, cy, 0.5 * r.width(), 0.5 * r.height());
    if v.abs() > var + rounding_slack(b, r) {
        Some(v.signum())
    } else {
        None
    }
}

/// Proves `P ≠ 0` on `r` by quadtree subdivision down to `max_depth`.
pub fn certify_zero_free(b: &Bivariate, r: &Rect, max_depth: u32) -> Option<f64> {
    certify_zero_free_where(b, r, max_depth, &|_| true)
}

/// Like [`certify_zero_free`] but only boxes for which `relevant` holds need
/// a certificate; the rest are discarded. All certified boxes must agree in
/// sign, which holds automatically when the relevant region is connected.
pub fn certify_zero_free_where(b: &Bivariate, r: &Rect, max_depth: u32, relevant: &dyn Fn(&Rect) -> bool) -> Option<f64> {
    let mut sign = 0.0;
    let mut stack = vec![(*r, 0u32)];
    while let Some((bx, depth)) = stack.pop() {
        if !relevant(&bx) {
            continue;
        }
        match zero_free_sign(b, &bx) {
            Some(s) => {
                if sign == 0.0 {
                    sign = s;
                } else if sign != s {
                    return None;
                }
            }
            None if depth < max_depth => stack.extend(bx.quadrants().into_iter().map(|q| (q, depth + 1))),
            None => return None,
        }
    }
    // nothing relevant counts as vacuously zero-free
    Some(if sign == 0.0 { 1.0 } else { sign })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;

    fn circle(r: f64) -> Bivariate {
        MultiPoly::bivariate(&[(2, 0, 1.0), (1, 0, -1.0), (0, 2, 1.0), (0, 1, -1.0), (0, 0, 0.5 - r * r)]).to_bivariate()
    }

    #[test]
    fn boxes_away_from_the_curve_certify() {
        let c = circle(0.25);
        assert_eq!(certify_zero_free(&c, &Rect::new(0.0, 0.0, 0.2, 0.2), 6), Some(1.0));
        assert_eq!(certify_zero_free(&c, &Rect::new(0.45, 0.45, 0.55, 0.55), 6), Some(-1.0));
        assert_eq!(certify_zero_free(&c, &Rect::new(0.0, 0.0, 0.5, 0.5), 10), None);
    }

    #[test]
    fn tangent_box_does_not_certify() {
        // the circle touches x = 0.25 at y = 0.5
        let c = circle(0.25);
        assert_eq!(certify_zero_free(&c, &Rect::new(0.0, 0.25, 0.25, 0.75), 12), None);
    }

    #[test]
    fn relevance_filter_skips_boxes() {
        let c = circle(0.25);
        let left = |r: &Rect| r.x0 < 0.2;
        assert_eq!(certify_zero_free_where(&c, &Rect::unit(), 8, &left), Some(1.0));
    }
}
