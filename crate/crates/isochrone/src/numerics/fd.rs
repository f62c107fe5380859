//! Finite-difference derivative estimation.
//!
//! Central differences with one level of Richardson extrapolation, giving
//! fourth-order accuracy for derivatives up to order four. Step sizes are
//! chosen to balance truncation against rounding for the derivative order:
//! roughly `eps^(1/(n+4))` scaled by the abscissa, where `n` is the
//! derivative order and `eps` is machine epsilon.

/// First derivative, O(h^4) via Richardson-extrapolated central differences.
pub fn d1<F: Fn(f64) -> f64>(f: &F, x: f64, scale: f64) -> f64 {
    let h = f64::EPSILON.powf(1.0 / 5.0) * scale.max(1e-8);
    let central = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * central(h) - central(2.0 * h)) / 3.0
}

/// Second derivative, O(h^4).
pub fn d2<F: Fn(f64) -> f64>(f: &F, x: f64, scale: f64) -> f64 {
    let h = f64::EPSILON.powf(1.0 / 6.0) * scale.max(1e-8);
    let central = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    (4.0 * central(h) - central(2.0 * h)) / 3.0
}

/// Third derivative, O(h^4).
pub fn d3<F: Fn(f64) -> f64>(f: &F, x: f64, scale: f64) -> f64 {
    let h = f64::EPSILON.powf(1.0 / 7.0) * scale.max(1e-8);
    let central =
        |h: f64| (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h);
    (4.0 * central(h) - central(2.0 * h)) / 3.0
}

/// Fourth derivative, O(h^4).
pub fn d4<F: Fn(f64) -> f64>(f: &F, x: f64, scale: f64) -> f64 {
    let h = f64::EPSILON.powf(1.0 / 8.0) * scale.max(1e-8);
    let central = |h: f64| {
        (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (h * h * h * h)
    };
    (4.0 * central(h) - central(2.0 * h)) / 3.0
}
