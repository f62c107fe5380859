//! Closed-form orbital laws of the isochrone families.
//!
//! Every quantity the orbit engine computes numerically has an analytic
//! counterpart here:
//!
//! - the radial period and azimuthal increment tables (per family, with
//!   the affine gauge rules `tau_r*(xi; L) = tau_r(xi - eps; sqrt(lam +
//!   L^2))` and `n_phi*(xi; L) = n_phi(...) . L / sqrt(lam + L^2)`);
//! - the closed-form radial actions, built on the two definite integrals
//!   `I1`, `I2`;
//! - the isochrone semi-major axis and the generalized third law
//!   `tau_r^2 mu = 4 pi^2 a^3` (equivalently `tau_r^2 |xi - eps|^3 =
//!   pi^2 mu^2 / 2` away from the harmonic case);
//! - a closed-orbit (Bertrand) scanner that singles out the Kepler and
//!   harmonic potentials by the rationality of `n_phi`.
//!
//! The unit tests cross-validate each closed form against the quadrature
//! and integration machinery in [`crate::orbit_engine`].

use crate::error::{Error, Result};
use crate::numerics::cf;
use crate::orbit_engine::{
    azimuthal_increment_quad, find_apsides, radial_period_quad, Apsides, OrbitParams,
    RadialPotential,
};
use crate::potentials::{Family, PotentialSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Residuals of the generalized third law for one orbit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LawReport {
    /// Radial period used for the residuals (from quadrature).
    pub tau_r: f64,
    /// Isochrone semi-major axis of the orbit.
    pub sma: f64,
    /// Normalized residual `|tau_r^2 mu / (4 pi^2 a^3) - 1|`.
    pub kepler3_residual: f64,
    /// Normalized residual `|tau_r^2 |xi - eps|^3 / (pi^2 mu^2 / 2) - 1|`;
    /// `None` for the harmonic-type families, which the energy form of the
    /// law does not cover.
    pub energy_form_residual: Option<f64>,
}

/// Closed-orbit scan result over a `(xi, L)` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BertrandReport {
    /// Whether every orbit on the grid closes: `n_phi` constant across the
    /// grid and equal to a small-denominator rational.
    pub all_closed: bool,
    /// Measured `n_phi` at each grid point, `xi`-major order.
    pub n_phi_values: Vec<f64>,
}

fn shifted_energy(psi: &PotentialSpec, xi: f64) -> f64 {
    xi - psi.epsilon()
}

fn effective_momentum(psi: &PotentialSpec, l: f64) -> Result<f64> {
    let v = psi.lambda() + l * l;
    if v <= 0.0 {
        return Err(Error::GaugeDomain { value: v });
    }
    Ok(v.sqrt())
}

/// Analytic radial period at energy `xi`: `2 pi mu |2 xi'|^{-3/2}` for the
/// Kepler/Henon/Bounded families and `pi / omega` for the harmonic ones,
/// evaluated at the gauge-shifted energy `xi' = xi - eps`.
///
/// For `FiniteHarmonic` the harmonic value applies to orbits confined to
/// `r < R`; the caller is responsible for that confinement.
pub fn tau_r_analytic(psi: &PotentialSpec, xi: f64) -> Result<f64> {
    let xs = shifted_energy(psi, xi);
    match psi.family() {
        Family::Harmonic | Family::FiniteHarmonic => Ok(PI / psi.omega()),
        Family::Kepler | Family::Henon => {
            if xs >= 0.0 {
                return Err(Error::EnergySign { xi_shifted: xs, family: psi.family().to_string() });
            }
            Ok(2.0 * PI * psi.mu() * (-2.0 * xs).powf(-1.5))
        }
        Family::Bounded => {
            if xs <= 0.0 {
                return Err(Error::EnergySign { xi_shifted: xs, family: psi.family().to_string() });
            }
            Ok(2.0 * PI * psi.mu() * (2.0 * xs).powf(-1.5))
        }
    }
}

/// Analytic azimuthal increment at angular momentum `L`: the base-family
/// value at the effective momentum `sqrt(lam + L^2)`, scaled by
/// `L / sqrt(lam + L^2)`.
pub fn n_phi_analytic(psi: &PotentialSpec, l: f64) -> Result<f64> {
    if l <= 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let le = effective_momentum(psi, l)?;
    let base = match psi.family() {
        Family::Kepler => 1.0,
        Family::Harmonic | Family::FiniteHarmonic => 0.5,
        Family::Henon => 0.5 + le / (2.0 * (4.0 * psi.scale_b() * psi.mu() + le * le).sqrt()),
        Family::Bounded => 0.5 - le / (2.0 * (4.0 * psi.scale_b() * psi.mu() + le * le).sqrt()),
    };
    Ok(base * l / le)
}

/// Closed-form radial action at `(xi, L)`.
///
/// Base forms at the shifted energy `xi'` and effective momentum `Le`:
/// Kepler `mu/sqrt(-2 xi') - Le`; harmonic `xi'/(2 omega) - Le/2`; Henon
/// `mu/sqrt(2|xi'|) - (Le + sqrt(4 b mu + Le^2))/2`; Bounded
/// `-mu/sqrt(2 xi') + (sqrt(4 b mu + Le^2) - Le)/2`. The Henon/Bounded
/// signs are fixed by requiring `d A_r / d xi = tau_r / 2 pi` and
/// `-d A_r / d L = n_phi` to reproduce the period table (checked in the
/// unit tests).
pub fn radial_action_analytic(psi: &PotentialSpec, orbit: OrbitParams) -> Result<f64> {
    let xs = shifted_energy(psi, orbit.xi);
    let le = effective_momentum(psi, orbit.l)?;
    let a = match psi.family() {
        Family::Kepler => {
            if xs >= 0.0 {
                return Err(Error::EnergySign { xi_shifted: xs, family: psi.family().to_string() });
            }
            psi.mu() / (-2.0 * xs).sqrt() - le
        }
        Family::Harmonic | Family::FiniteHarmonic => xs / (2.0 * psi.omega()) - 0.5 * le,
        Family::Henon => {
            if xs >= 0.0 {
                return Err(Error::EnergySign { xi_shifted: xs, family: psi.family().to_string() });
            }
            let root = (4.0 * psi.scale_b() * psi.mu() + le * le).sqrt();
            psi.mu() / (2.0 * xs.abs()).sqrt() - 0.5 * (le + root)
        }
        Family::Bounded => {
            if xs <= 0.0 {
                return Err(Error::EnergySign { xi_shifted: xs, family: psi.family().to_string() });
            }
            let root = (4.0 * psi.scale_b() * psi.mu() + le * le).sqrt();
            -psi.mu() / (2.0 * xs).sqrt() + 0.5 * (root - le)
        }
    };
    // A tiny negative value is the circular orbit seen through rounding; a
    // genuinely negative action means no periodic radial orbit exists.
    if a < -1e-12 * (1.0 + le) {
        return Err(Error::NoPRO { value: a });
    }
    Ok(a.max(0.0))
}

/// The first defining integral
/// `I1(u1, u2) = Int_{u1}^{u2} sqrt((u - u1)(u2 - u)) / u du
///             = (pi/2)(u1 + u2 - 2 sqrt(u1 u2))` for `0 < u1 <= u2`.
pub fn integral_i1(u1: f64, u2: f64) -> Result<f64> {
    if !(u1 > 0.0) || u1 > u2 {
        return Err(Error::OrderError { u1, u2 });
    }
    Ok(0.5 * PI * (u1 + u2 - 2.0 * (u1 * u2).sqrt()))
}

/// The second defining integral
/// `I2(u1, u2) = Int_{u1}^{u2} sqrt((u - u1)(u2 - u)) (u - 1) / (u (u - 2)) du`,
/// in closed form on the two branches `u1 > 2` and `u2 < 2`. The
/// straddling case `u1 < 2 < u2` is rejected rather than extrapolated.
pub fn integral_i2(u1: f64, u2: f64) -> Result<f64> {
    if !(u1 > 0.0) || u1 > u2 {
        return Err(Error::OrderError { u1, u2 });
    }
    let common = u1 + u2 - (u1 * u2).sqrt() - 2.0;
    if u1 > 2.0 {
        Ok(0.5 * PI * (common - ((u1 - 2.0) * (u2 - 2.0)).sqrt()))
    } else if u2 < 2.0 {
        Ok(0.5 * PI * (common + ((2.0 - u1) * (2.0 - u2)).sqrt()))
    } else {
        Err(Error::BranchError { u1, u2 })
    }
}

/// The isochrone semi-major axis of an orbit with the given apsides:
/// Kepler `(r_p + r_a)/2`; finite harmonic `(1/2)^{2/3} R` (independent of
/// the orbit); Henon `(sqrt(b^2 + r_a^2) + sqrt(b^2 + r_p^2))/2`; Bounded
/// `(sqrt(b^2 - r_a^2) + sqrt(b^2 - r_p^2))/2`.
pub fn isochrone_sma(psi: &PotentialSpec, aps: &Apsides) -> Result<f64> {
    if !(aps.r_p > 0.0) || aps.r_p > aps.r_a {
        return Err(Error::InvalidParameters("apsides must satisfy 0 < r_p <= r_a".into()));
    }
    match psi.family() {
        Family::Kepler => Ok(0.5 * (aps.r_p + aps.r_a)),
        Family::FiniteHarmonic => Ok(0.5f64.powf(2.0 / 3.0) * psi.radius_r()),
        Family::Henon => {
            let b2 = psi.scale_b() * psi.scale_b();
            Ok(0.5 * ((b2 + aps.r_a * aps.r_a).sqrt() + (b2 + aps.r_p * aps.r_p).sqrt()))
        }
        Family::Bounded => {
            let b = psi.scale_b();
            if aps.r_a > b {
                return Err(Error::DomainError {
                    r: aps.r_a,
                    reason: format!("apoastron beyond the bounded domain edge b = {b}"),
                });
            }
            Ok(0.5 * ((b * b - aps.r_a * aps.r_a).sqrt() + (b * b - aps.r_p * aps.r_p).sqrt()))
        }
        Family::Harmonic => Err(Error::InvalidParameters(
            "the isochrone semi-major axis is not defined for the pure harmonic family".into(),
        )),
    }
}

/// Verify the generalized third law on one orbit: compute `tau_r` by
/// quadrature, the semi-major axis from the apsides, and return the
/// normalized residuals of `tau_r^2 mu = 4 pi^2 a^3` and (for the
/// non-harmonic families) `tau_r^2 |xi - eps|^3 = pi^2 mu^2 / 2`.
///
/// For `FiniteHarmonic` the orbit must lie entirely inside the core
/// (`r_a < R`); `mu = omega^2 R^3` and the energy form is skipped.
pub fn kepler3_check(psi: &PotentialSpec, orbit: OrbitParams) -> Result<LawReport> {
    if psi.family() == Family::Harmonic {
        return Err(Error::InvalidParameters(
            "the third law in SMA form does not cover the pure harmonic family".into(),
        ));
    }
    let aps = find_apsides(psi, orbit)?;
    if psi.family() == Family::FiniteHarmonic && aps.r_a >= psi.radius_r() {
        return Err(Error::DomainError {
            r: aps.r_a,
            reason: format!(
                "orbit crosses the finite-harmonic core boundary R = {}",
                psi.radius_r()
            ),
        });
    }
    let tau = radial_period_quad(psi, orbit)?;
    let sma = isochrone_sma(psi, &aps)?;
    let mu = match psi.family() {
        Family::FiniteHarmonic => psi.omega() * psi.omega() * psi.radius_r().powi(3),
        _ => psi.mu(),
    };
    let kepler3_residual = (tau * tau * mu / (4.0 * PI * PI * sma.powi(3)) - 1.0).abs();
    let energy_form_residual = match psi.family() {
        Family::Harmonic | Family::FiniteHarmonic => None,
        _ => {
            let xs = shifted_energy(psi, orbit.xi).abs();
            Some((tau * tau * xs.powi(3) / (0.5 * PI * PI * mu * mu) - 1.0).abs())
        }
    };
    Ok(LawReport { tau_r: tau, sma, kepler3_residual, energy_form_residual })
}

/// Closed-orbit scan: measure `n_phi` by quadrature over the grid and
/// report whether every orbit closes — `n_phi` constant (variation below
/// `1e-8`) and within `1e-9` of a rational `p/q` with `q <= 100`.
pub fn bertrand_scan(
    psi: &dyn RadialPotential,
    xi_grid: &[f64],
    l_grid: &[f64],
) -> Result<BertrandReport> {
    let mut values = Vec::with_capacity(xi_grid.len() * l_grid.len());
    for &xi in xi_grid {
        for &l in l_grid {
            values.push(azimuthal_increment_quad(psi, OrbitParams::new(xi, l))?);
        }
    }
    let mn = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mx = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let constant = mx - mn < 1e-8;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let rational = cf::is_near_rational(mean, 100, 1e-9);
    Ok(BertrandReport { all_closed: constant && rational, n_phi_values: values })
}
