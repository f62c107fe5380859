//! Gauss–Legendre quadrature nodes and weights.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev initial guess; weights follow from the
//! standard formula `w_i = 2 / ((1 - x_i^2) P_n'(x_i)^2)`. Rules are cached
//! per order behind a mutex since node generation is deterministic.

use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

/// A Gauss–Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    /// Nodes in `(-1, 1)`, ascending.
    pub nodes: Vec<f64>,
    /// Positive weights summing to 2.
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Build the `n`-point rule from scratch.
    ///
    /// Exploits the symmetry of the nodes: only the non-negative half is
    /// iterated, the mirror half is reflected.
    fn generate(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre rule needs at least 2 points");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess for the i-th root (descending).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    // One polishing step after convergence.
                    let (p2, d2) = legendre_and_derivative(n, x);
                    dp = d2;
                    x -= p2 / d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            nodes[i] = -x;
            weights[i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Fetch the `n`-point rule from the process-wide cache.
    pub fn of_order(n: usize) -> GaussRule {
        static CACHE: OnceLock<Mutex<HashMap<usize, GaussRule>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("gauss rule cache poisoned");
        guard.entry(n).or_insert_with(|| GaussRule::generate(n)).clone()
    }

    /// Integrate `f` over `[a, b]` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Evaluate `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate a smooth function on `[a, b]` with order doubling until two
/// successive Gauss–Legendre estimates agree to `rel_tol` (relative to the
/// magnitude of the estimate, with an absolute floor). Returns the last
/// estimate, or `None` if the order budget `max_order` is exhausted.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    mut f: F,
    rel_tol: f64,
    max_order: usize,
) -> Option<f64> {
    let mut order = 16;
    let mut last = GaussRule::of_order(order).integrate(a, b, &mut f);
    while order * 2 <= max_order {
        order *= 2;
        let next = GaussRule::of_order(order).integrate(a, b, &mut f);
        let scale = next.abs().max(1.0e-300);
        if (next - last).abs() <= rel_tol * scale.max(1.0e-12) {
            return Some(next);
        }
        last = next;
    }
    None
}

/// Globally adaptive Simpson quadrature, used as an *independent* check of
/// the Gauss–Legendre results and of closed forms. Recursion bisects until
/// the local Richardson error estimate passes `tol` (absolute).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
