//! Adaptive embedded Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! The classic RK5(4)7M pair with FSAL and a PI step-size controller.
//! Accepted steps are recorded with endpoint states and derivatives so that
//! callers can do cubic-Hermite dense output for event location (turning
//! points) and uniform resampling without re-integrating.

/// One accepted integration step with enough data for dense output.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    /// Derivatives at the step endpoints.
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> Step<N> {
    /// Cubic Hermite interpolation of the state at `t` in `[t0, t1]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * self.y0[i]
                + h10 * h * self.f0[i]
                + h01 * self.y1[i]
                + h11 * h * self.f1[i];
        }
        out
    }
}

/// Butcher tableau of the Dormand–Prince 5(4) pair.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order solution weights (equal to row 7 of `A`; FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `dy/dt = rhs(t, y)` from `(t0, y0)` to `t_end` at local
/// tolerance `tol` (used both absolutely and relatively). Returns the list
/// of accepted steps, or `Err((t, steps))` with the failure time and the
/// steps accepted so far if the step size underflows (e.g. at a
/// singularity of the right-hand side).
pub fn integrate<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: f64,
) -> Result<Vec<Step<N>>, (f64, Vec<Step<N>>)> {
    integrate_capped(rhs, t0, y0, t_end, tol, f64::INFINITY)
}

/// [`integrate`] with a maximum step size `h_max`, for callers that rely
/// on the cubic-Hermite dense output staying accurate between step
/// endpoints (its error grows as `h^4` and is not controlled by `tol`).
pub fn integrate_capped<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: f64,
    h_max: f64,
) -> Result<Vec<Step<N>>, (f64, Vec<Step<N>>)> {
    let mut t = t0;
    let mut y = y0;
    let mut f_now = rhs(t, &y);
    let span = (t_end - t0).abs().max(1e-12);
    let mut h = (span * 1e-4).min(0.1).min(h_max);
    let mut steps = Vec::new();
    let mut err_prev: f64 = 1.0;
    let max_steps = 50_000_000usize;
    for _ in 0..max_steps {
        if t >= t_end {
            return Ok(steps);
        }
        if t + h > t_end {
            h = t_end - t;
        }
        // Stage evaluations (k[0] reuses the FSAL derivative).
        let mut k = [[0.0; N]; 7];
        k[0] = f_now;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }
        // Fifth-order solution and embedded error estimate.
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut dy5 = 0.0;
            let mut dy4 = 0.0;
            for s in 0..7 {
                dy5 += B5[s] * k[s][i];
                dy4 += B4[s] * k[s][i];
            }
            y5[i] += h * dy5;
            let sc = tol * (1.0 + y[i].abs().max(y5[i].abs()));
            let e = h * (dy5 - dy4) / sc;
            err += e * e;
        }
        err = (err / N as f64).sqrt().max(1e-300);
        // A non-finite estimate (stage evaluation left the domain of the
        // right-hand side) must reject the step, never accept it.
        if !err.is_finite() {
            h *= 0.1;
            if h < 1e-14 * span {
                return Err((t, steps));
            }
            continue;
        }
        if err <= 1.0 {
            // Accept; k[6] is the derivative at the new point (FSAL).
            let step = Step {
                t0: t,
                t1: t + h,
                y0: y,
                y1: y5,
                f0: f_now,
                f1: k[6],
            };
            steps.push(step);
            t += h;
            y = y5;
            f_now = k[6];
            // PI controller (Gustafsson): order-5 exponents.
            let fac = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h = (h * fac.clamp(0.2, 5.0)).min(h_max);
            err_prev = err;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < 1e-14 * span {
            return Err((t, steps));
        }
    }
    Err((t, steps))
}
