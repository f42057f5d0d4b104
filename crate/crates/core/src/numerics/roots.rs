use crate::error::{QbcError, Result};

/// Finds a root of `f` in `[lo, hi]` by bisection. Returns the midpoint of a
/// sign-change bracket of width at most `tol`; an exact zero ends early.
pub fn bisection_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(QbcError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = eval(&f, a)?;
    let fb = eval(&f, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(QbcError::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    while b - a > tol {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            break; // interval at float resolution
        }
        let fm = eval(&f, mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(a + 0.5 * (b - a))
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(QbcError::NonFinite(format!("f({x}) = {y}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_root() {
        let r = bisection_root(|x| x - 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_zero() {
        let r = bisection_root(f64::cos, 1.0, 2.0, 1e-12).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_rejected() {
        assert!(matches!(bisection_root(|x| x * x + 1.0, -1.0, 1.0, 1e-9), Err(QbcError::NoSignChange { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(bisection_root(|_| f64::NAN, 0.0, 1.0, 1e-9), Err(QbcError::NonFinite(_))));
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(bisection_root(|x| x, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn refinement_stays_inside_coarser_bracket() {
        let f = |x: f64| x.powi(3) - 2.0;
        let mut prev = bisection_root(f, 0.0, 2.0, 1e-2).unwrap();
        let mut width = 1e-2;
        for _ in 0..8 {
            width /= 10.0;
            let next = bisection_root(f, 0.0, 2.0, width).unwrap();
            assert!((next - prev).abs() <= 10.0 * width + 1e-15);
            prev = next;
        }
        assert!((prev - 2f64.cbrt()).abs() < 1e-9);
    }
}
