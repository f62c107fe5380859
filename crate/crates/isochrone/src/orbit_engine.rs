//! Numerical orbital dynamics in an arbitrary radial potential.
//!
//! All of the quantities of a periodic radial orbit (PRO) at specific
//! energy `xi` and angular momentum `L` follow from the effective
//! potential `psi_e(r) = L^2/(2 r^2) + psi(r)`:
//!
//! - the circular radius `r_c` minimizes `psi_e`, and a PRO exists for
//!   `xi_c <= xi < psi_inf`;
//! - the apsides `r_p <= r_a` solve `psi_e(r) = xi`;
//! - the radial period, azimuthal increment per radial period, and radial
//!   action are integrals between the apsides with inverse-square-root
//!   endpoint singularities.
//!
//! The singular quadratures use the substitution `r = c - h cos(theta)`
//! with `c = (r_p + r_a)/2`, `h = (r_a - r_p)/2`, under which
//! `(r - r_p)(r_a - r) = h^2 sin^2(theta)` exactly, so the integrands
//! become smooth and fixed-order Gauss-Legendre with order doubling
//! converges geometrically. Near-circular orbits switch to the harmonic
//! limit of the well.
//!
//! Trajectories are integrated with the adaptive Runge-Kutta pair in
//! [`crate::numerics::rk`], with apsis events located by dense-output
//! root-finding on the radial velocity. The isochrony test sweeps a
//! `(xi, L)` grid and checks the three equivalent characterizations:
//! `tau_r` independent of `L`, `n_phi` independent of `xi`, and a
//! vanishing mixed partial of the radial action.

use crate::error::{Error, Result};
use crate::numerics::{fd, gauss, par, rk, roots};
use crate::potentials::PotentialSpec;
use serde::{Deserialize, Serialize};

/// Maximum Gauss-Legendre order tried by the orbit quadratures.
pub const MAX_QUAD_ORDER: usize = 1 << 14;

/// Relative apsis gap below which orbits are treated as circular and the
/// harmonic-well limit formulas are used (the singular quadrature's
/// conditioning degrades as the apsides merge).
const NEAR_CIRCULAR_GAP: f64 = 1e-8;

/// A radial potential as seen by the orbit engine. [`PotentialSpec`]
/// implements this with analytic derivatives; custom (non-family)
/// potentials can hook in via [`CustomPotential`].
pub trait RadialPotential: Sync {
    /// Potential value at radius `r`.
    fn eval(&self, r: f64) -> Result<f64>;

    /// Radial derivative at `r`.
    fn eval_derivative(&self, r: f64) -> Result<f64>;

    /// Second radial derivative; the default differentiates
    /// `eval_derivative` numerically.
    fn eval_second_derivative(&self, r: f64) -> Result<f64> {
        let f = |x: f64| self.eval_derivative(x).unwrap_or(f64::NAN);
        let v = fd::d1(&f, r, r.abs().max(1e-3));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DomainError { r, reason: "numerical second derivative undefined".into() })
        }
    }

    /// Radial domain `[0, r_max]`.
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    /// Supremum of the potential over the domain (the escape energy).
    fn psi_infinity(&self) -> f64 {
        let (_, hi) = self.domain();
        let probe = if hi.is_finite() { hi * (1.0 - 1e-12) } else { 1e12 };
        self.eval(probe).unwrap_or(f64::INFINITY)
    }
}

impl RadialPotential for PotentialSpec {
    fn eval(&self, r: f64) -> Result<f64> {
        PotentialSpec::eval(self, r)
    }
    fn eval_derivative(&self, r: f64) -> Result<f64> {
        PotentialSpec::eval_derivative(self, r)
    }
    fn eval_second_derivative(&self, r: f64) -> Result<f64> {
        PotentialSpec::eval_second_derivative(self, r)
    }
    fn domain(&self) -> (f64, f64) {
        PotentialSpec::domain(self)
    }
    fn psi_infinity(&self) -> f64 {
        PotentialSpec::psi_infinity(self)
    }
}

/// A radial potential defined by value/derivative callbacks, for testing
/// non-family (control) potentials through the same machinery.
pub struct CustomPotential<F, G>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    value: F,
    derivative: G,
    domain: (f64, f64),
    psi_inf: f64,
}

impl<F, G> CustomPotential<F, G>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    pub fn new(value: F, derivative: G, domain: (f64, f64), psi_inf: f64) -> Self {
        CustomPotential { value, derivative, domain, psi_inf }
    }
}

impl<F, G> RadialPotential for CustomPotential<F, G>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    fn eval(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || r > self.domain.1 {
            return Err(Error::DomainError { r, reason: "outside custom potential domain".into() });
        }
        Ok((self.value)(r))
    }
    fn eval_derivative(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || r > self.domain.1 {
            return Err(Error::DomainError { r, reason: "outside custom potential domain".into() });
        }
        Ok((self.derivative)(r))
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn psi_infinity(&self) -> f64 {
        self.psi_inf
    }
}

/// The conserved pair of a radial orbit: specific energy and specific
/// angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub xi: f64,
    pub l: f64,
}

impl OrbitParams {
    pub fn new(xi: f64, l: f64) -> Self {
        OrbitParams { xi, l }
    }
}

/// Periastron and apoastron of a periodic radial orbit (equal iff
/// circular).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Apsides {
    pub r_p: f64,
    pub r_a: f64,
}

impl Apsides {
    /// Whether the apsides coincide to the near-circular threshold.
    pub fn is_circular(&self) -> bool {
        self.r_a - self.r_p < NEAR_CIRCULAR_GAP * 0.5 * (self.r_a + self.r_p)
    }
}

/// Effective potential `psi_e(r) = L^2/(2 r^2) + psi(r)`.
pub fn effective_potential(psi: &dyn RadialPotential, l: f64, r: f64) -> Result<f64> {
    let centrifugal = if l == 0.0 { 0.0 } else { l * l / (2.0 * r * r) };
    Ok(psi.eval(r)? + centrifugal)
}

/// Derivative of the effective potential.
fn effective_derivative(psi: &dyn RadialPotential, l: f64, r: f64) -> Result<f64> {
    let centrifugal = if l == 0.0 { 0.0 } else { -l * l / (r * r * r) };
    Ok(psi.eval_derivative(r)? + centrifugal)
}

/// Second derivative of the effective potential (the squared radial
/// epicyclic frequency at the circular radius).
fn effective_second_derivative(psi: &dyn RadialPotential, l: f64, r: f64) -> Result<f64> {
    let centrifugal = if l == 0.0 { 0.0 } else { 3.0 * l * l / (r * r * r * r) };
    Ok(psi.eval_second_derivative(r)? + centrifugal)
}

/// The circular orbit for angular momentum `l`: the radius minimizing the
/// effective potential and its energy `(r_c, xi_c)`.
///
/// The minimum is located by scanning for a sign change of `psi_e'` over a
/// geometric radius ladder and polishing with Brent's method to relative
/// `1e-13`.
pub fn circular_orbit(psi: &dyn RadialPotential, l: f64) -> Result<(f64, f64)> {
    let (_, hi) = psi.domain();
    let g = |r: f64| effective_derivative(psi, l, r);
    // Upper end with psi_e' > 0: the domain edge for bounded domains, an
    // expanding probe otherwise.
    let mut top = if hi.is_finite() { hi * (1.0 - 1e-10) } else { 1.0 };
    if !hi.is_finite() {
        let mut found = false;
        for _ in 0..200 {
            if let Ok(v) = g(top) {
                if v > 0.0 {
                    found = true;
                    break;
                }
            }
            top *= 2.0;
        }
        if !found {
            return Err(Error::NoMinimum { l });
        }
    }
    // Walk down until psi_e' < 0.
    let mut lo = top;
    let mut prev = top;
    let mut bracket = None;
    for _ in 0..600 {
        prev = lo;
        lo *= 0.5;
        match g(lo) {
            Ok(v) if v < 0.0 => {
                bracket = Some((lo, prev));
                break;
            }
            Ok(_) => {}
            Err(_) => break,
        }
    }
    let (lo, hi_b) = bracket.ok_or(Error::NoMinimum { l })?;
    let _ = prev;
    let r_c = roots::brent(|r| g(r).unwrap_or(f64::NAN), lo, hi_b, 1e-13)
        .ok_or(Error::NoMinimum { l })?;
    let xi_c = effective_potential(psi, l, r_c)?;
    Ok((r_c, xi_c))
}

/// The apsides of the orbit: the two roots of `psi_e(r) = xi` around the
/// circular radius, found by geometric bracket expansion from `r_c` and
/// Brent's method, then polished with Newton steps to machine precision
/// (the quadratures are sensitive to apsis error near the endpoints).
pub fn find_apsides(psi: &dyn RadialPotential, orbit: OrbitParams) -> Result<Apsides> {
    let (r_c, xi_c) = circular_orbit(psi, orbit.l)?;
    let (_, hi) = psi.domain();
    let xi_sup = if hi.is_finite() {
        effective_potential(psi, orbit.l, hi * (1.0 - 1e-12))?
    } else {
        psi.psi_infinity()
    };
    if orbit.xi >= xi_sup {
        return Err(Error::Unbound { xi: orbit.xi, psi_inf: xi_sup });
    }
    if orbit.xi < xi_c - 1e-13 * xi_c.abs().max(1.0) {
        return Err(Error::BelowCircular { xi: orbit.xi, xi_c });
    }
    if orbit.xi - xi_c < 1e-13 * xi_c.abs().max(1.0) {
        return Ok(Apsides { r_p: r_c, r_a: r_c });
    }
    let h = |r: f64| effective_potential(psi, orbit.l, r).map(|v| v - orbit.xi);
    let solve = |a: f64, b: f64| -> Result<f64> {
        let mut r = roots::brent(|r| h(r).unwrap_or(f64::NAN), a, b, 1e-15)
            .ok_or(Error::NoMinimum { l: orbit.l })?;
        // Newton polish: the quadrature substitution assumes the apsides
        // are exact roots of psi_e - xi.
        for _ in 0..3 {
            let (Ok(f), Ok(df)) = (h(r), effective_derivative(psi, orbit.l, r)) else { break };
            if df == 0.0 {
                break;
            }
            let step = f / df;
            let next = r - step;
            if next > 0.0 && (!hi.is_finite() || next < hi) {
                r = next;
            }
            if step.abs() < 1e-16 * r.abs() {
                break;
            }
        }
        Ok(r)
    };
    // Inward bracket for the periastron.
    let mut inner = r_c;
    let mut peri_bracket = None;
    for _ in 0..600 {
        let prev = inner;
        inner *= 0.5;
        match h(inner) {
            Ok(v) if v > 0.0 => {
                peri_bracket = Some((inner, prev));
                break;
            }
            Ok(_) => {}
            Err(_) => break,
        }
    }
    let (pl, ph) = peri_bracket.ok_or(Error::NoMinimum { l: orbit.l })?;
    let r_p = solve(pl, ph)?;
    // Outward bracket for the apoastron.
    let mut outer = r_c;
    let mut apo_bracket = None;
    for _ in 0..600 {
        let prev = outer;
        outer = if hi.is_finite() { 0.5 * (outer + hi) } else { outer * 2.0 };
        match h(outer) {
            Ok(v) if v > 0.0 => {
                apo_bracket = Some((prev, outer));
                break;
            }
            Ok(_) => {}
            Err(_) => break,
        }
    }
    let (al, ah) = apo_bracket.ok_or(Error::Unbound { xi: orbit.xi, psi_inf: xi_sup })?;
    let r_a = solve(al, ah)?;
    Ok(Apsides { r_p: r_p.min(r_a), r_a: r_a.max(r_p) })
}

/// The common regularized quadrature: integrate
/// `integrand(r, w) d(theta)` over `[0, pi]`, where
/// `w(theta) = Q(r) / (h^2 sin^2 theta)` is the smooth positive factor of
/// `Q(r) = 2 (xi - psi(r)) - L^2/r^2 = (r - r_p)(r_a - r) w`.
fn pro_quadrature(
    psi: &dyn RadialPotential,
    orbit: OrbitParams,
    aps: &Apsides,
    rel_tol: f64,
    integrand: &dyn Fn(f64, f64) -> f64,
) -> Result<f64> {
    let c = 0.5 * (aps.r_p + aps.r_a);
    let half = 0.5 * (aps.r_a - aps.r_p);
    let f = |theta: f64| {
        let s = theta.sin();
        let r = c - half * theta.cos();
        let q = 2.0 * (orbit.xi - psi.eval(r).expect("interior radius"))
            - if orbit.l == 0.0 { 0.0 } else { orbit.l * orbit.l / (r * r) };
        let w = (q / (half * half * s * s)).max(1e-300);
        integrand(r, w)
    };
    gauss::integrate_adaptive(0.0, std::f64::consts::PI, f, rel_tol, MAX_QUAD_ORDER)
        .ok_or(Error::NonConvergent { max_order: MAX_QUAD_ORDER })
}

/// Radial period `tau_r` by regularized quadrature (circular orbits use
/// the harmonic-well limit `2 pi / sqrt(psi_e''(r_c))`).
pub fn radial_period_quad(psi: &dyn RadialPotential, orbit: OrbitParams) -> Result<f64> {
    radial_period_quad_tol(psi, orbit, 1e-10)
}

fn radial_period_quad_tol(psi: &dyn RadialPotential, orbit: OrbitParams, rel_tol: f64) -> Result<f64> {
    if orbit.l == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let aps = find_apsides(psi, orbit)?;
    if aps.is_circular() {
        let r_c = 0.5 * (aps.r_p + aps.r_a);
        let k2 = effective_second_derivative(psi, orbit.l, r_c)?;
        return Ok(2.0 * std::f64::consts::PI / k2.sqrt());
    }
    pro_quadrature(psi, orbit, &aps, rel_tol, &|_r, w| 2.0 / w.sqrt())
}

/// Azimuthal increment per radial period, expressed as the fraction
/// `n_phi = Delta phi / (2 pi)`.
pub fn azimuthal_increment_quad(psi: &dyn RadialPotential, orbit: OrbitParams) -> Result<f64> {
    azimuthal_increment_quad_tol(psi, orbit, 1e-10)
}

fn azimuthal_increment_quad_tol(
    psi: &dyn RadialPotential,
    orbit: OrbitParams,
    rel_tol: f64,
) -> Result<f64> {
    if orbit.l == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let aps = find_apsides(psi, orbit)?;
    if aps.is_circular() {
        let r_c = 0.5 * (aps.r_p + aps.r_a);
        let tau = radial_period_quad_tol(psi, orbit, rel_tol)?;
        return Ok(tau * orbit.l / (2.0 * std::f64::consts::PI * r_c * r_c));
    }
    let l = orbit.l;
    pro_quadrature(psi, orbit, &aps, rel_tol, &move |r, w| {
        l / (std::f64::consts::PI * r * r * w.sqrt())
    })
}

/// Radial action `A_r = (1/pi) Int sqrt(Q) dr` (zero iff circular).
pub fn radial_action_quad(psi: &dyn RadialPotential, orbit: OrbitParams) -> Result<f64> {
    radial_action_quad_tol(psi, orbit, 1e-10)
}

fn radial_action_quad_tol(psi: &dyn RadialPotential, orbit: OrbitParams, rel_tol: f64) -> Result<f64> {
    if orbit.l == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let aps = find_apsides(psi, orbit)?;
    if aps.is_circular() {
        return Ok(0.0);
    }
    // The action integrand sqrt(Q) dr = h^2 sin^2(theta) sqrt(w) d(theta)
    // needs sin(theta) explicitly, so it bypasses the shared quadrature
    // closure shape.
    let half = 0.5 * (aps.r_a - aps.r_p);
    let c = 0.5 * (aps.r_p + aps.r_a);
    let f = |theta: f64| {
        let s = theta.sin();
        let r = c - half * theta.cos();
        let q = 2.0 * (orbit.xi - psi.eval(r).expect("interior radius"))
            - orbit.l * orbit.l / (r * r);
        let w = (q / (half * half * s * s)).max(0.0);
        half * half * s * s * w.sqrt() / std::f64::consts::PI
    };
    let a = gauss::integrate_adaptive(0.0, std::f64::consts::PI, f, rel_tol, MAX_QUAD_ORDER)
        .ok_or(Error::NonConvergent { max_order: MAX_QUAD_ORDER })?;
    Ok(a.max(0.0))
}

/// One integrated trajectory sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub r: f64,
    pub phi: f64,
    /// Instantaneous `|xi(t) - xi(0)|`.
    pub energy_err: f64,
}

/// Apsis kind of a trajectory event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApsisKind {
    Periastron,
    Apoastron,
}

/// A located apsis crossing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ApsisEvent {
    pub t: f64,
    pub kind: ApsisKind,
    pub r: f64,
    pub phi: f64,
}

/// An integrated orbit: uniform samples, apsis events, and the maximum
/// energy drift over the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub events: Vec<ApsisEvent>,
    pub energy_drift: f64,
}

/// Integrate the planar orbit `d2r/dt2 = -psi'(r) + L^2/r^3`,
/// `dphi/dt = L/r^2` from the periastron (`r(0) = r_p`, `dr/dt = 0`,
/// `phi(0) = phi0`) over `n_radial_periods` radial periods at local
/// integrator tolerance `tol`.
///
/// Radial orbits (`L = 0`) are allowed: they start at the apoastron and
/// the run is truncated at the collision with the center.
pub fn integrate_orbit(
    psi: &dyn RadialPotential,
    orbit: OrbitParams,
    phi0: f64,
    n_radial_periods: f64,
    tol: f64,
) -> Result<Trajectory> {
    if !(n_radial_periods > 0.0) {
        return Err(Error::InvalidParameters("n_radial_periods must be positive".into()));
    }
    let (_, hi) = psi.domain();
    let (r_start, t_end) = if orbit.l > 0.0 {
        let aps = find_apsides(psi, orbit)?;
        let tau = radial_period_quad(psi, orbit)?;
        (aps.r_p, n_radial_periods * tau)
    } else {
        // Radial orbit: start at the apoastron (the root of psi = xi) and
        // budget time from the dynamical timescale there.
        let r_a = radial_turning_point(psi, orbit.xi)?;
        let accel = psi.eval_derivative(r_a * 0.5)?.abs().max(1e-12);
        let t_dyn = (r_a / accel).sqrt();
        (r_a, n_radial_periods * 4.0 * t_dyn)
    };
    let l = orbit.l;
    let rhs = |_t: f64, y: &[f64; 3]| -> [f64; 3] {
        let r = y[0];
        let dpsi = psi.eval_derivative(r).unwrap_or(f64::NAN);
        let cent = if l == 0.0 { 0.0 } else { l * l / (r * r * r) };
        let dphi = if l == 0.0 { 0.0 } else { l / (r * r) };
        [y[1], -dpsi + cent, dphi]
    };
    let y0 = [r_start, 0.0, phi0];
    // Cap the step at the resampling resolution so the cubic-Hermite dense
    // output (error ~ h^4, uncontrolled by `tol`) stays within the energy
    // budget of the run.
    let h_max = t_end / (n_radial_periods * 256.0).max(64.0);
    // Integrate a notch below the requested budget: `tol` is the accuracy
    // target for the whole run, and local errors accumulate over the
    // O(10^3) capped steps.
    let mut steps = match rk::integrate_capped(rhs, 0.0, y0, t_end, 0.1 * tol, h_max) {
        Ok(s) => s,
        Err((t, partial)) if l == 0.0 && !partial.is_empty() => {
            // A radial orbit ends at the collision with the center: keep
            // the accepted steps and truncate the run there.
            let _ = t;
            partial
        }
        Err((t, _)) => return Err(Error::StepFailure { t }),
    };
    // Near a collision the last accepted step can carry a non-finite
    // endpoint derivative (evaluated past the center); drop such steps.
    while let Some(s) = steps.last() {
        let bad = s.y1.iter().chain(s.f1.iter()).any(|v| !v.is_finite());
        if bad {
            steps.pop();
        } else {
            break;
        }
    }
    if steps.is_empty() {
        return Err(Error::StepFailure { t: 0.0 });
    }
    let xi0 = orbit.xi;
    let energy = |y: &[f64; 3]| -> f64 {
        let kin = 0.5 * y[1] * y[1];
        let cent = if l == 0.0 { 0.0 } else { l * l / (2.0 * y[0] * y[0]) };
        kin + cent + psi.eval(y[0]).map(|v| v).unwrap_or(f64::NAN)
    };
    // Apsis events: roots of the radial velocity inside each step, via
    // cubic-Hermite dense output.
    let mut events = Vec::new();
    if l > 0.0 {
        let first_kind = ApsisKind::Periastron;
        events.push(ApsisEvent { t: 0.0, kind: first_kind, r: r_start, phi: phi0 });
    }
    for s in &steps {
        if s.y0[1] == 0.0 && s.t0 == 0.0 {
            continue;
        }
        if s.y0[1].signum() == s.y1[1].signum() {
            continue;
        }
        let v = |t: f64| s.interpolate(t)[1];
        if let Some(te) = roots::brent(v, s.t0, s.t1, 1e-13) {
            let ye = s.interpolate(te);
            let acc = rhs(te, &ye)[1];
            let kind = if acc > 0.0 { ApsisKind::Periastron } else { ApsisKind::Apoastron };
            events.push(ApsisEvent { t: te, kind, r: ye[0], phi: ye[2] });
        }
    }
    // Uniform resampling via dense output.
    let t_last = steps.last().map(|s| s.t1).unwrap_or(0.0);
    let n = ((n_radial_periods * 256.0).ceil() as usize).clamp(64, 1 << 20);
    let mut samples = Vec::with_capacity(n + 1);
    let mut drift = 0.0f64;
    let mut idx = 0usize;
    for j in 0..=n {
        let t = t_last * j as f64 / n as f64;
        while idx + 1 < steps.len() && steps[idx].t1 < t {
            idx += 1;
        }
        let y = if t <= 0.0 { y0 } else { steps[idx].interpolate(t) };
        if hi.is_finite() && y[0] > hi {
            return Err(Error::DomainExit { t, r: y[0] });
        }
        let err = (energy(&y) - xi0).abs();
        if err.is_finite() {
            drift = drift.max(err);
        }
        samples.push(TrajectorySample { t, r: y[0], phi: y[2], energy_err: err });
    }
    Ok(Trajectory { samples, events, energy_drift: drift })
}

/// The apoastron of a radial (`L = 0`) orbit: the root of `psi(r) = xi`.
fn radial_turning_point(psi: &dyn RadialPotential, xi: f64) -> Result<f64> {
    let (_, hi) = psi.domain();
    if xi >= psi.psi_infinity() {
        return Err(Error::Unbound { xi, psi_inf: psi.psi_infinity() });
    }
    let g = |r: f64| psi.eval(r).map(|v| v - xi);
    let mut r = if hi.is_finite() { hi * (1.0 - 1e-12) } else { 1.0 };
    if !hi.is_finite() {
        for _ in 0..200 {
            match g(r) {
                Ok(v) if v > 0.0 => break,
                _ => r *= 2.0,
            }
        }
    }
    let mut lo = r;
    let mut bracket = None;
    for _ in 0..600 {
        let prev = lo;
        lo *= 0.5;
        match g(lo) {
            Ok(v) if v < 0.0 => {
                bracket = Some((lo, prev));
                break;
            }
            _ => {}
        }
    }
    let (a, b) = bracket.ok_or(Error::Unbound { xi, psi_inf: psi.psi_infinity() })?;
    roots::brent(|r| g(r).unwrap_or(f64::NAN), a, b, 1e-13)
        .ok_or(Error::Unbound { xi, psi_inf: psi.psi_infinity() })
}

/// Precession statistics of a rosette trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RosetteStats {
    /// Mean azimuthal increment between consecutive periastra, as a
    /// fraction of a full turn.
    pub n_phi_measured: f64,
    /// Whether the orbit turns around the center within one radial period
    /// (`n_phi > 1/2`) rather than oscillating in a half-plane sector.
    pub turns_center: bool,
}

/// Measure the azimuthal increment of a trajectory from its periastron
/// events.
pub fn rosette_stats(traj: &Trajectory) -> Result<RosetteStats> {
    let peri: Vec<&ApsisEvent> =
        traj.events.iter().filter(|e| e.kind == ApsisKind::Periastron).collect();
    if peri.len() < 2 {
        return Err(Error::InsufficientEvents { found: peri.len(), need: 2 });
    }
    let mut acc = 0.0;
    for w in peri.windows(2) {
        acc += (w[1].phi - w[0].phi) / (2.0 * std::f64::consts::PI);
    }
    let n_phi = acc / (peri.len() - 1) as f64;
    // The half-turn boundary (harmonic-type orbits) is decided with a
    // small tolerance so measurement noise cannot flip it.
    Ok(RosetteStats { n_phi_measured: n_phi, turns_center: n_phi > 0.5 + 1e-7 })
}

/// A grid point skipped by [`isochrony_test`] together with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub xi: f64,
    pub l: f64,
    pub reason: String,
}

/// Diagnostics of the three equivalent isochrony characterizations over a
/// `(xi, L)` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsochronyReport {
    /// Max relative variation of `tau_r` across `L` at fixed `xi`.
    pub tau_variation: f64,
    /// Max absolute variation of `n_phi` across `xi` at fixed `L`.
    pub n_phi_variation: f64,
    /// Max absolute mixed partial `d2 A_r / (d xi d L)` over the grid.
    pub mixed_partial_max: f64,
    /// Verdict: all three diagnostics below `1e-6`.
    pub is_isochrone: bool,
    /// Grid points without a valid periodic radial orbit.
    pub skipped: Vec<SkippedPoint>,
}

/// Test a potential for isochrony on a `(xi, L)` grid: the radial period
/// must depend only on `xi`, the azimuthal increment only on `L`, and the
/// radial action must be additively separable (vanishing mixed partial).
/// Grid points without a valid orbit are skipped and reported.
///
/// Points are evaluated with [`par::map_ordered`], so the sweep can use
/// `ISOCHRONE_THREADS` workers with deterministic output.
pub fn isochrony_test(
    psi: &dyn RadialPotential,
    xi_grid: &[f64],
    l_grid: &[f64],
) -> Result<IsochronyReport> {
    let points: Vec<(f64, f64)> = xi_grid
        .iter()
        .flat_map(|&xi| l_grid.iter().map(move |&l| (xi, l)))
        .collect();
    let threads = par::thread_count_from_env();
    // Per point: (tau, n_phi, mixed partial of the action).
    type PointOut = std::result::Result<(f64, f64, f64), String>;
    let outs: Vec<PointOut> = par::map_ordered(&points, threads, |&(xi, l)| {
        let orbit = OrbitParams::new(xi, l);
        let tau = radial_period_quad_tol(psi, orbit, 1e-11).map_err(|e| e.to_string())?;
        let nphi = azimuthal_increment_quad_tol(psi, orbit, 1e-11).map_err(|e| e.to_string())?;
        // Mixed finite difference of the action. The action quadrature is
        // pushed to 1e-12 so that the difference quotient (which divides
        // by 4 h k ~ 4e-6) stays well below the 1e-6 verdict line for
        // genuinely separable actions.
        let h = 1e-3 * xi.abs().max(1.0);
        let k = 1e-3 * l.abs().max(1.0);
        let mut corner = [[0.0f64; 2]; 2];
        for (i, sx) in [-1.0, 1.0].into_iter().enumerate() {
            for (j, sl) in [-1.0, 1.0].into_iter().enumerate() {
                let o = OrbitParams::new(xi + sx * h, l + sl * k);
                corner[i][j] = radial_action_quad_tol(psi, o, 1e-12).map_err(|e| e.to_string())?;
            }
        }
        let mixed = (corner[1][1] - corner[1][0] - corner[0][1] + corner[0][0]) / (4.0 * h * k);
        Ok((tau, nphi, mixed))
    });
    let mut skipped = Vec::new();
    let mut table: Vec<Option<(f64, f64, f64)>> = Vec::with_capacity(outs.len());
    for (out, &(xi, l)) in outs.iter().zip(&points) {
        match out {
            Ok(v) => table.push(Some(*v)),
            Err(reason) => {
                skipped.push(SkippedPoint { xi, l, reason: reason.clone() });
                table.push(None);
            }
        }
    }
    let nl = l_grid.len();
    let at = |i: usize, j: usize| table[i * nl + j];
    // tau_r across L at fixed xi.
    let mut tau_var = 0.0f64;
    for i in 0..xi_grid.len() {
        let vals: Vec<f64> = (0..nl).filter_map(|j| at(i, j)).map(|v| v.0).collect();
        if vals.len() >= 2 {
            let (mn, mx) = minmax(&vals);
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            tau_var = tau_var.max((mx - mn) / mean.abs().max(1e-300));
        }
    }
    // n_phi across xi at fixed L.
    let mut nphi_var = 0.0f64;
    for j in 0..nl {
        let vals: Vec<f64> = (0..xi_grid.len()).filter_map(|i| at(i, j)).map(|v| v.1).collect();
        if vals.len() >= 2 {
            let (mn, mx) = minmax(&vals);
            nphi_var = nphi_var.max(mx - mn);
        }
    }
    let mixed_max = table
        .iter()
        .flatten()
        .map(|v| v.2.abs())
        .fold(0.0f64, f64::max);
    let verdict = tau_var < 1e-6 && nphi_var < 1e-6 && mixed_max < 1e-6;
    Ok(IsochronyReport {
        tau_variation: tau_var,
        n_phi_variation: nphi_var,
        mixed_partial_max: mixed_max,
        is_isochrone: verdict,
        skipped,
    })
}

fn minmax(vals: &[f64]) -> (f64, f64) {
    let mut mn = f64::INFINITY;
    let mut mx = f64::NEG_INFINITY;
    for &v in vals {
        mn = mn.min(v);
        mx = mx.max(v);
    }
    (mn, mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::AffineTransform;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn effective_potential_examples() {
        let kep = PotentialSpec::kepler(1.0).unwrap();
        assert_relative_eq!(effective_potential(&kep, 1.0, 1.0).unwrap(), -0.5);
        // Gauge identity: a lambda-gauge behaves like a shifted momentum.
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let gauged = hen.apply_affine(&AffineTransform::new(0.3, 0.8));
        for r in [0.4, 1.0, 3.0] {
            let lhs = effective_potential(&gauged, 1.1, r).unwrap();
            let l_eff = (0.8f64 + 1.1 * 1.1).sqrt();
            let rhs = effective_potential(&hen, l_eff, r).unwrap() + 0.3;
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
        // The Henon effective potential at L = 0 stays finite at the
        // center.
        assert_relative_eq!(effective_potential(&hen, 0.0, 1e-12).unwrap(), -0.5, epsilon = 1e-9);
    }

    #[test]
    fn circular_orbits_match_closed_forms_and_minimizer() {
        let kep = PotentialSpec::kepler(1.0).unwrap();
        let (rc, xic) = circular_orbit(&kep, 1.0).unwrap();
        assert_relative_eq!(rc, 1.0, max_relative = 1e-11);
        assert_relative_eq!(xic, -0.5, max_relative = 1e-11);
        let ha = PotentialSpec::harmonic(1.0).unwrap();
        let (rc, xic) = circular_orbit(&ha, 1.0).unwrap();
        assert_relative_eq!(rc, 1.0, max_relative = 1e-11);
        assert_relative_eq!(xic, 1.0, max_relative = 1e-11);
        // Independent oracle: golden-section minimization of psi_e.
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let (rc, xic) = circular_orbit(&hen, 0.5).unwrap();
        let rc_gold = roots::golden_section_min(
            |r| effective_potential(&hen, 0.5, r).unwrap(),
            1e-3,
            100.0,
            1e-12,
        );
        assert_relative_eq!(rc, rc_gold, max_relative = 1e-6);
        assert_relative_eq!(
            xic,
            effective_potential(&hen, 0.5, rc_gold).unwrap(),
            max_relative = 1e-10
        );
        // No minimum without momentum for an increasing base family.
        assert!(matches!(circular_orbit(&kep, 0.0), Err(Error::NoMinimum { .. })));
    }

    #[test]
    fn apsides_match_the_kepler_ellipse() {
        // e = 0.5 at xi = -1/2: r_p + r_a = mu/|xi|, r_p r_a = L^2/(2|xi|).
        let kep = PotentialSpec::kepler(1.0).unwrap();
        let l = 0.75f64.sqrt();
        let aps = find_apsides(&kep, OrbitParams::new(-0.5, l)).unwrap();
        assert_relative_eq!(aps.r_p, 0.5, max_relative = 1e-10);
        assert_relative_eq!(aps.r_a, 1.5, max_relative = 1e-10);
        // Circular case collapses to r_c.
        let (rc, xic) = circular_orbit(&kep, l).unwrap();
        let circ = find_apsides(&kep, OrbitParams::new(xic, l)).unwrap();
        assert_relative_eq!(circ.r_p, rc, max_relative = 1e-10);
        assert_relative_eq!(circ.r_a, rc, max_relative = 1e-10);
        // Sign-bracket oracle for the Henon case.
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let orbit = OrbitParams::new(-0.25, 0.5);
        let aps = find_apsides(&hen, orbit).unwrap();
        let h = |r: f64| effective_potential(&hen, orbit.l, r).unwrap() - orbit.xi;
        let d = 1e-6;
        assert!(h(aps.r_p * (1.0 - d)) > 0.0 && h(aps.r_p * (1.0 + d)) < 0.0);
        assert!(h(aps.r_a * (1.0 - d)) < 0.0 && h(aps.r_a * (1.0 + d)) > 0.0);
        // Error paths.
        assert!(matches!(
            find_apsides(&kep, OrbitParams::new(0.1, l)),
            Err(Error::Unbound { .. })
        ));
        assert!(matches!(
            find_apsides(&kep, OrbitParams::new(-5.0, l)),
            Err(Error::BelowCircular { .. })
        ));
    }

    #[test]
    fn radial_periods_match_the_family_table() {
        let kep = PotentialSpec::kepler(1.0).unwrap();
        for l in [0.2, 0.5, 0.75f64.sqrt()] {
            let tau = radial_period_quad(&kep, OrbitParams::new(-0.5, l)).unwrap();
            assert_relative_eq!(tau, 2.0 * PI, max_relative = 1e-9);
        }
        let ha = PotentialSpec::harmonic(2.0).unwrap();
        for (xi, l) in [(3.0, 0.7), (5.0, 1.3)] {
            let tau = radial_period_quad(&ha, OrbitParams::new(xi, l)).unwrap();
            assert_relative_eq!(tau, PI / 2.0, max_relative = 1e-9);
        }
        // Bounded family: tau = 2 pi mu |2 xi|^{-3/2}.
        let bo = PotentialSpec::bounded(1.0, 1.0).unwrap();
        let tau = radial_period_quad(&bo, OrbitParams::new(0.75, 0.05)).unwrap();
        assert_relative_eq!(tau, 2.0 * PI * 1.5f64.powf(-1.5), max_relative = 1e-8);
    }

    #[test]
    fn azimuthal_increments_match_the_family_table() {
        let kep = PotentialSpec::kepler(1.0).unwrap();
        for (xi, l) in [(-0.5, 0.5), (-0.2, 1.0)] {
            let n = azimuthal_increment_quad(&kep, OrbitParams::new(xi, l)).unwrap();
            assert_relative_eq!(n, 1.0, max_relative = 1e-9);
        }
        let ha = PotentialSpec::harmonic(1.0).unwrap();
        let n = azimuthal_increment_quad(&ha, OrbitParams::new(2.0, 0.8)).unwrap();
        assert_relative_eq!(n, 0.5, max_relative = 1e-9);
        // Henon: 1/2 + L / (2 sqrt(4 b mu + L^2)), independent of xi.
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let expect = 0.5 + 2.0 / (2.0 * 8.0f64.sqrt());
        // At L = 2 the circular energy is about -0.0858, so valid energies
        // sit just below zero.
        for xi in [-0.07, -0.05, -0.03] {
            let n = azimuthal_increment_quad(&hen, OrbitParams::new(xi, 2.0)).unwrap();
            assert_relative_eq!(n, expect, max_relative = 1e-8);
        }
        assert!(matches!(
            azimuthal_increment_quad(&kep, OrbitParams::new(-0.5, 0.0)),
            Err(Error::ZeroMomentum)
        ));
    }

    #[test]
    fn radial_action_examples() {
        let kep = PotentialSpec::kepler(1.0).unwrap();
        let a = radial_action_quad(&kep, OrbitParams::new(-0.5, 0.5)).unwrap();
        assert_relative_eq!(a, 0.5, max_relative = 1e-9);
        // Circular orbit: zero action.
        let (_, xic) = circular_orbit(&kep, 0.5).unwrap();
        let a0 = radial_action_quad(&kep, OrbitParams::new(xic, 0.5)).unwrap();
        assert!(a0.abs() < 1e-12);
        // Henon closed form: mu/sqrt(2|xi|) - (L + sqrt(4 b mu + L^2))/2.
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let a = radial_action_quad(&hen, OrbitParams::new(-0.25, 0.5)).unwrap();
        let expect = 1.0 / 0.5f64.sqrt() - 0.5 * (0.5 + 4.25f64.sqrt());
        assert_relative_eq!(a, expect, max_relative = 1e-8);
    }

    #[test]
    fn trajectories_conserve_energy_and_time_the_apsides() {
        let kep = PotentialSpec::kepler(1.0).unwrap();
        let orbit = OrbitParams::new(-0.5, 0.75f64.sqrt());
        let traj = integrate_orbit(&kep, orbit, 0.0, 10.0, 1e-10).unwrap();
        assert!(traj.energy_drift < 1e-8, "drift {}", traj.energy_drift);
        // Samples increase in t and respect the apsis bounds.
        let aps = find_apsides(&kep, orbit).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].phi >= w[0].phi);
        }
        for s in &traj.samples {
            assert!(s.r > aps.r_p - 1e-6 && s.r < aps.r_a + 1e-6);
        }
        // Periastron events spaced by the radial period; Delta phi = 2 pi.
        let peri: Vec<&ApsisEvent> =
            traj.events.iter().filter(|e| e.kind == ApsisKind::Periastron).collect();
        assert!(peri.len() >= 10);
        let tau = radial_period_quad(&kep, orbit).unwrap();
        for w in peri.windows(2) {
            assert_relative_eq!(w[1].t - w[0].t, tau, max_relative = 1e-6);
            assert_relative_eq!(w[1].phi - w[0].phi, 2.0 * PI, max_relative = 1e-6);
        }
    }

    #[test]
    fn harmonic_trajectory_has_half_turn_rosette() {
        let ha = PotentialSpec::harmonic(1.0).unwrap();
        let orbit = OrbitParams::new(2.0, 0.8);
        let traj = integrate_orbit(&ha, orbit, 0.0, 4.0, 1e-10).unwrap();
        // r(t) has period pi for omega = 1.
        let peri: Vec<&ApsisEvent> =
            traj.events.iter().filter(|e| e.kind == ApsisKind::Periastron).collect();
        assert!(peri.len() >= 3);
        assert_relative_eq!(peri[1].t - peri[0].t, PI, max_relative = 1e-7);
        let stats = rosette_stats(&traj).unwrap();
        assert_relative_eq!(stats.n_phi_measured, 0.5, max_relative = 1e-6);
        assert!(!stats.turns_center);
    }

    #[test]
    fn measured_precession_matches_quadrature() {
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let orbit = OrbitParams::new(-0.25, 0.5);
        let traj = integrate_orbit(&hen, orbit, 0.3, 6.0, 1e-11).unwrap();
        let stats = rosette_stats(&traj).unwrap();
        let n_quad = azimuthal_increment_quad(&hen, orbit).unwrap();
        assert_relative_eq!(stats.n_phi_measured, n_quad, max_relative = 1e-6);
        assert!(stats.turns_center, "Henon rosettes overshoot half a turn");
        // Bounded rosettes stay below half a turn.
        let bo = PotentialSpec::bounded(1.0, 1.0).unwrap();
        // Valid window at L = 0.3: circular energy ~0.674, escape ~1.045.
        let orbit = OrbitParams::new(0.9, 0.3);
        let traj = integrate_orbit(&bo, orbit, 0.0, 6.0, 1e-11).unwrap();
        let stats = rosette_stats(&traj).unwrap();
        assert!(stats.n_phi_measured < 0.5);
        assert!(!stats.turns_center);
        // Event-timed period agrees with the quadrature.
        let peri: Vec<&ApsisEvent> =
            traj.events.iter().filter(|e| e.kind == ApsisKind::Periastron).collect();
        let tau = radial_period_quad(&bo, orbit).unwrap();
        let dt = (peri.last().unwrap().t - peri[0].t) / (peri.len() - 1) as f64;
        assert_relative_eq!(dt, tau, max_relative = 1e-6);
    }

    #[test]
    fn isochrony_verdicts() {
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        // Valid for every L in the grid: the circular energy at L = 0.8
        // is about -0.229 (and the test perturbs xi by 1e-3 for the mixed
        // difference).
        let xi = [-0.22, -0.18, -0.14, -0.1];
        let ls = [0.3, 0.5, 0.8];
        let rep = isochrony_test(&hen, &xi, &ls).unwrap();
        assert!(rep.is_isochrone, "{rep:?}");
        assert!(rep.skipped.is_empty());
        // A non-isochrone composite via the custom-sampler hook.
        let ctrl = CustomPotential::new(
            |r: f64| -1.0 / r + 0.1 * r,
            |r: f64| 1.0 / (r * r) + 0.1,
            (0.0, f64::INFINITY),
            f64::INFINITY,
        );
        // Circular energy of the control at L = 0.8 is about -0.72.
        let rep = isochrony_test(&ctrl, &[-0.6, -0.5, -0.45], &[0.3, 0.5, 0.8]).unwrap();
        assert!(!rep.is_isochrone);
        assert!(rep.tau_variation > 1e-3 || rep.mixed_partial_max > 1e-3, "{rep:?}");
        // Gauged harmonic: isochrone with n_phi = L / (2 sqrt(lambda + L^2)).
        let gha = PotentialSpec::harmonic(1.0)
            .unwrap()
            .apply_affine(&AffineTransform::new(0.0, 1.0));
        let rep = isochrony_test(&gha, &[2.0, 2.5, 3.0], &[0.6, 1.0]).unwrap();
        assert!(rep.is_isochrone, "{rep:?}");
        for l in [0.6f64, 1.0] {
            let n = azimuthal_increment_quad(&gha, OrbitParams::new(2.5, l)).unwrap();
            assert_relative_eq!(n, l / (2.0 * (1.0 + l * l).sqrt()), max_relative = 1e-8);
        }
    }

    #[test]
    fn gauge_law_for_periods_and_precessions() {
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let j = AffineTransform::new(0.25, 0.6);
        let star = hen.apply_affine(&j);
        let (xi, l) = (0.1, 0.7);
        let l_eff = (j.lambda + l * l).sqrt();
        let tau_star = radial_period_quad(&star, OrbitParams::new(xi, l)).unwrap();
        let tau_base = radial_period_quad(&hen, OrbitParams::new(xi - j.epsilon, l_eff)).unwrap();
        assert_relative_eq!(tau_star, tau_base, max_relative = 1e-8);
        let n_star = azimuthal_increment_quad(&star, OrbitParams::new(xi, l)).unwrap();
        let n_base = azimuthal_increment_quad(&hen, OrbitParams::new(xi - j.epsilon, l_eff)).unwrap();
        assert_relative_eq!(n_star, n_base * l / l_eff, max_relative = 1e-8);
    }

    #[test]
    fn radial_orbit_truncates_at_collision() {
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        // L = 0: the star falls from the apoastron and the run stops at
        // the collision with the center, keeping only valid samples.
        let traj = integrate_orbit(&hen, OrbitParams::new(-0.3, 0.0), 0.0, 2.0, 1e-10).unwrap();
        assert!(!traj.samples.is_empty());
        let r_a = radial_turning_point(&hen, -0.3).unwrap();
        for s in &traj.samples {
            assert!(s.r.is_finite());
            assert!(s.r >= -1e-9 && s.r <= r_a * (1.0 + 1e-6), "r = {}", s.r);
        }
        assert!(traj.energy_drift < 1e-7, "drift {}", traj.energy_drift);
        // The fall reaches the center well before the time budget.
        let t_last = traj.samples.last().unwrap().t;
        let v_center = (2.0f64 * (-0.3 + 0.5)).sqrt();
        assert!(v_center > 0.0 && t_last < 30.0);
        // Period ops reject L = 0.
        assert!(matches!(
            radial_period_quad(&hen, OrbitParams::new(-0.3, 0.0)),
            Err(Error::ZeroMomentum)
        ));
    }
}
