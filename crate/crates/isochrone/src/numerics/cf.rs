//! Rational approximation by continued fractions.
//!
//! The Bertrand scanner needs a finite proxy for "is this number rational":
//! expand the value as a simple continued fraction, walk the convergents
//! `p/q` with `q` capped, and accept if one reproduces the value within a
//! tolerance.

/// Best rational approximation `p/q` of `value` with `q <= max_den`,
/// obtained from the continued-fraction convergents. Returns `(p, q)`.
pub fn best_rational(value: f64, max_den: u64) -> (i64, u64) {
    let sign = if value < 0.0 { -1 } else { 1 };
    let mut x = value.abs();
    // Convergent recurrences p_k = a_k p_{k-1} + p_{k-2}, same for q.
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0u64, x.floor() as i64, 1u64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if frac.abs() < 1e-15 {
            break;
        }
        x = 1.0 / frac;
        let a = x.floor();
        frac = x - a;
        let p2 = a as i64 * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    (sign * p1, q1.max(1))
}

/// Whether `value` is within `tol` of a rational with denominator `<= max_den`.
pub fn is_near_rational(value: f64, max_den: u64, tol: f64) -> bool {
    let (p, q) = best_rational(value, max_den);
    (value - p as f64 / q as f64).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_simple_fractions() {
        assert_eq!(best_rational(0.5, 100), (1, 2));
        assert_eq!(best_rational(1.0, 100), (1, 1));
        assert_eq!(best_rational(2.0 / 7.0, 100), (2, 7));
        assert_eq!(best_rational(-3.0 / 4.0, 100), (-3, 4));
    }

    #[test]
    fn rejects_irrationals_at_tight_tolerance() {
        assert!(!is_near_rational(std::f64::consts::SQRT_2 / 2.0, 100, 1e-9));
        assert!(!is_near_rational(0.5 + 1.0 / (2.0 * 8.0f64.sqrt()), 100, 1e-9));
        assert!(is_near_rational(0.5, 100, 1e-9));
        assert!(is_near_rational(1.0, 100, 1e-9));
    }
}
