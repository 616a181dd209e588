//! Bracketing root finders shared by the pointwise model and the closed forms.

/// Absolute tolerance on the bracketed variable.
pub const BISECT_TOL: f64 = 1e-12;
/// Iteration cap for every bisection in the crate.
pub const BISECT_MAX_ITER: usize = 200;

/// Bisection for a root of `f` on `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs (or one of them vanishes).
///
/// Returns `None` when the bracket is invalid.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Grows `hi` geometrically from `start` until `pred(hi)` holds.
pub fn expand_upper<F>(mut pred: F, start: f64) -> Option<f64>
where
    F: FnMut(f64) -> bool,
{
    let mut hi = start.max(1e-12);
    for _ in 0..2000 {
        if pred(hi) {
            return Some(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn expands() {
        let hi = expand_upper(|x| x > 1000.0, 1.0).unwrap();
        assert!(hi > 1000.0 && hi <= 2048.0);
    }
}
