//! Closed-form complex quadratic and cubic root finding with Newton polish.
//!
//! The stage characteristic polynomials are degree 2 or 3 with complex
//! coefficients. Roots come from the stable quadratic formula (sign chosen to
//! avoid cancellation) and Cardano's method on the depressed cubic (branch
//! chosen to maximize |u³|), each followed by a few Newton steps on the
//! original polynomial.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Roots of a characteristic polynomial plus the worst residual |p(s_i)|.
#[derive(Clone, Debug)]
pub struct CharacteristicRoots {
    pub roots: Vec<C64>,
    pub residual: f64,
}

impl CharacteristicRoots {
    pub fn degree(&self) -> usize {
        self.roots.len()
    }
}

fn eval(coeffs: &[C64], s: C64) -> C64 {
    coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, c| acc * s + c)
}

fn eval_deriv(coeffs: &[C64], s: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * s + c * C64::new(k as f64, 0.0);
    }
    acc
}

fn polish(coeffs: &[C64], mut s: C64) -> C64 {
    for _ in 0..4 {
        let f = eval(coeffs, s);
        let df = eval_deriv(coeffs, s);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        s -= step;
    }
    s
}

/// Roots of p(s) = Σ_k coeffs[k] s^k, ascending order, degree 2 or 3.
///
/// Fails with a degenerate-degree error when the leading coefficient is
/// numerically zero relative to the rest, and a domain error for other
/// lengths.
pub fn solve_polynomial(coeffs: &[C64]) -> Result<CharacteristicRoots> {
    if coeffs.len() != 3 && coeffs.len() != 4 {
        return Err(Error::Domain(format!(
            "expected 3 or 4 polynomial coefficients, got {}",
            coeffs.len()
        )));
    }
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let lead = coeffs.last().unwrap();
    if scale == 0.0 || lead.norm() <= 1e-14 * scale {
        return Err(Error::DegenerateLeadingCoefficient);
    }

    let roots: Vec<C64> = if coeffs.len() == 3 {
        quadratic_roots(coeffs[1] / lead, coeffs[0] / lead)
    } else {
        cubic_roots(coeffs[2] / lead, coeffs[1] / lead, coeffs[0] / lead)
    }
    .into_iter()
    .map(|s| polish(coeffs, s))
    .collect();

    let residual = roots
        .iter()
        .map(|s| eval(coeffs, *s).norm())
        .fold(0.0f64, f64::max);
    Ok(CharacteristicRoots { roots, residual })
}

/// Roots of s² + b s + c.
fn quadratic_roots(b: C64, c: C64) -> Vec<C64> {
    let d = (b * b - 4.0 * c).sqrt();
    // pick the branch of ±d that adds constructively to b
    let d = if (b.re * d.re + b.im * d.im) >= 0.0 {
        d
    } else {
        -d
    };
    let q = -0.5 * (b + d);
    if q.norm() > 0.0 {
        vec![q, c / q]
    } else {
        // b and c both (near) zero: double root at the origin
        vec![-0.5 * b, -0.5 * b]
    }
}

/// Roots of s³ + a s² + b s + c.
fn cubic_roots(a: C64, b: C64, c: C64) -> Vec<C64> {
    let third = C64::new(1.0 / 3.0, 0.0);
    let shift = a * third;
    // depressed form t³ + p t + q with s = t - a/3
    let p = b - a * a * third;
    let q = 2.0 / 27.0 * a * a * a - a * b * third + c;

    let half_q = 0.5 * q;
    let d = (half_q * half_q + p * p * p / 27.0).sqrt();
    let u3 = {
        let plus = -half_q + d;
        let minus = -half_q - d;
        if plus.norm() >= minus.norm() {
            plus
        } else {
            minus
        }
    };
    if u3.norm() == 0.0 {
        // p = q = 0: triple root
        return vec![-shift; 3];
    }
    let u = u3.cbrt();
    let omega = C64::new(-0.5, 0.75f64.sqrt());
    (0..3)
        .map(|k| {
            let uk = u * omega.powu(k);
            uk - p / (3.0 * uk) - shift
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sorted_by_re(mut roots: Vec<C64>) -> Vec<C64> {
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        roots
    }

    #[test]
    fn quadratic_known_roots() {
        // s² - 1
        let r = solve_polynomial(&[C64::new(-1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
            .unwrap();
        let roots = sorted_by_re(r.roots);
        assert_abs_diff_eq!(roots[0].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(roots[1].re, 1.0, epsilon = 1e-14);
        // s² + 1
        let r = solve_polynomial(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
            .unwrap();
        let mut ims: Vec<f64> = r.roots.iter().map(|s| s.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(ims[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ims[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn cubic_known_roots() {
        // (s-1)(s-2)(s-3) = s³ - 6s² + 11s - 6
        let r = solve_polynomial(&[
            C64::new(-6.0, 0.0),
            C64::new(11.0, 0.0),
            C64::new(-6.0, 0.0),
            C64::new(1.0, 0.0),
        ])
        .unwrap();
        let roots = sorted_by_re(r.roots);
        for (root, expect) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(root.re, expect, epsilon = 1e-12);
            assert_abs_diff_eq!(root.im, 0.0, epsilon = 1e-12);
        }
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn repeated_roots_are_handled() {
        // s² (double root at 0)
        let zero = C64::new(0.0, 0.0);
        let r = solve_polynomial(&[zero, zero, C64::new(1.0, 0.0)]).unwrap();
        for root in &r.roots {
            assert!(root.norm() < 1e-14);
        }
        // (s - 2)³ = s³ - 6s² + 12s - 8
        let r = solve_polynomial(&[
            C64::new(-8.0, 0.0),
            C64::new(12.0, 0.0),
            C64::new(-6.0, 0.0),
            C64::new(1.0, 0.0),
        ])
        .unwrap();
        for root in &r.roots {
            // triple roots cost relative accuracy ~ eps^(1/3); residual still tiny
            assert!((root - C64::new(2.0, 0.0)).norm() < 1e-4);
        }
        assert!(r.residual < 1e-11);
    }

    #[test]
    fn degenerate_leading_coefficient_is_rejected() {
        let r = solve_polynomial(&[
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(3.0, 0.0),
            C64::new(1e-18, 0.0),
        ]);
        assert!(matches!(r, Err(Error::DegenerateLeadingCoefficient)));
        assert!(solve_polynomial(&[C64::new(1.0, 0.0); 2]).is_err());
        assert!(solve_polynomial(&[C64::new(1.0, 0.0); 6]).is_err());
    }

    fn arb_c64(mag: f64) -> impl Strategy<Value = C64> {
        (-mag..mag, -mag..mag).prop_map(|(re, im)| C64::new(re, im))
    }

    /// Leading coefficients bounded away from zero.
    fn arb_lead() -> impl Strategy<Value = C64> {
        (0.3f64..3.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, phi)| C64::from_polar(r, phi))
    }

    proptest! {
        #[test]
        fn quadratic_residuals_and_vieta(c0 in arb_c64(10.0), c1 in arb_c64(10.0), c2 in arb_lead()) {
            let coeffs = [c0, c1, c2];
            let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
            let r = solve_polynomial(&coeffs).unwrap();
            prop_assert!(r.residual <= 1e-10 * scale);
            let sum: C64 = r.roots.iter().sum();
            let prod: C64 = r.roots.iter().product();
            prop_assert!((sum + c1 / c2).norm() < 1e-9 * (1.0 + sum.norm()));
            prop_assert!((prod - c0 / c2).norm() < 1e-9 * (1.0 + prod.norm()));
        }

        #[test]
        fn cubic_residuals_and_vieta(
            c0 in arb_c64(10.0),
            c1 in arb_c64(10.0),
            c2 in arb_c64(10.0),
            c3 in arb_lead(),
        ) {
            let coeffs = [c0, c1, c2, c3];
            let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
            let r = solve_polynomial(&coeffs).unwrap();
            prop_assert!(r.residual <= 1e-10 * scale);
            let sum: C64 = r.roots.iter().sum();
            let prod: C64 = r.roots.iter().product();
            prop_assert!((sum + c2 / c3).norm() < 1e-9 * (1.0 + sum.norm()));
            prop_assert!((prod + c0 / c3).norm() < 1e-9 * (1.0 + prod.norm()));
        }
    }
}
