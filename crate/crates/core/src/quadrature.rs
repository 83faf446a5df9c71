//! Adaptive Simpson quadrature for smooth scalar integrands.

use crate::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to absolute tolerance `tol` by recursive Simpson bisection with
/// Richardson correction.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && tol > 0.0) {
        return Err(Error::domain(format!(
            "adaptive Simpson needs finite bounds and positive tolerance (a={a}, b={b}, tol={tol})"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain("adaptive Simpson produced a non-finite value"))
    }
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = adaptive_simpson(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-12).unwrap();
        assert!((v - (8.0 + 1.0 - 1.5 + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn meets_tolerance_on_peaked_integrand() {
        let exact = (10f64).atan() * 2.0 / 10.0;
        let v = adaptive_simpson(|x| 1.0 / (1.0 + 100.0 * x * x), -1.0, 1.0, 1e-10).unwrap();
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(adaptive_simpson(|x| x, 0.0, 1.0, 0.0).is_err());
        assert!(adaptive_simpson(|x| x, 0.0, f64::INFINITY, 1e-6).is_err());
        assert_eq!(adaptive_simpson(|x| x, 0.3, 0.3, 1e-6).unwrap(), 0.0);
    }
}
