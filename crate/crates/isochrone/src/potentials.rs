//! The four isochrone potential families and the affine group.
//!
//! Units: G = 1 and all quantities are specific (per unit test mass), so
//! energies are `xi = E/m` and angular momenta `L = L/m`. A potential is a
//! base family member plus an affine offset `J_{eps,lam}` acting as
//! `psi(r) -> psi(r) + eps + lam/(2 r^2)`:
//!
//! - `Kepler`:         `psi(r) = -mu / r`
//! - `Harmonic`:       `psi(r) = omega^2 r^2 / 2`
//! - `FiniteHarmonic`: harmonic ball of radius `R` matched to a Kepler
//!   exterior, `psi(r) = omega^2 r^2 / 2 - 3 omega^2 R^2 / 2` for `r < R`
//!   and `-omega^2 R^3 / r` beyond; its mass parameter is the derived
//!   `mu = omega^2 R^3`.
//! - `Henon`:          `psi(r) = -mu / (b + sqrt(b^2 + r^2))`
//! - `Bounded`:        `psi(r) = +mu / (b + sqrt(b^2 - r^2))` on `[0, b]`
//!
//! The decreasing "negative branch" variants of the Henon and Bounded
//! potentials are not separate families: the reduced branches are exchanged
//! by `J_{-mu/b, -4 b mu}` (Henon) and `J_{+mu/b, -4 b mu}` (Bounded),
//! which relative to the base forms above means an offset of
//! `(-mu/(2b), -4 b mu)` resp. `(+mu/(2b), -4 b mu)`; convenience
//! constructors build them that way.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The potential families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Kepler,
    Harmonic,
    FiniteHarmonic,
    Henon,
    Bounded,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::Kepler => "Kepler",
            Family::Harmonic => "Harmonic",
            Family::FiniteHarmonic => "FiniteHarmonic",
            Family::Henon => "Henon",
            Family::Bounded => "Bounded",
        };
        f.write_str(s)
    }
}

/// An element `J_{eps,lam}` of the affine group acting on potentials as
/// `psi -> psi + eps + lam/(2 r^2)`, i.e. on the Henon-plane curve as
/// `(x, Y) -> (x, Y + eps x + lam)`.
///
/// Composition is componentwise addition; the group is isomorphic to
/// `(R^2, +)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineTransform {
    pub epsilon: f64,
    pub lambda: f64,
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform { epsilon: 0.0, lambda: 0.0 };

    pub fn new(epsilon: f64, lambda: f64) -> Self {
        AffineTransform { epsilon, lambda }
    }

    /// Group composition (commutative addition).
    pub fn compose(&self, other: &AffineTransform) -> AffineTransform {
        AffineTransform { epsilon: self.epsilon + other.epsilon, lambda: self.lambda + other.lambda }
    }

    /// Group inverse.
    pub fn inverse(&self) -> AffineTransform {
        AffineTransform { epsilon: -self.epsilon, lambda: -self.lambda }
    }
}

/// A member of one of the four isochrone families plus an affine offset.
///
/// Serialized as a flat object `{family, mu?, omega?, b?, R?, epsilon,
/// lambda}` with exactly the parameters the family requires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpecRepr", into = "PotentialSpecRepr")]
pub struct PotentialSpec {
    family: Family,
    /// Mass parameter; meaningful for Kepler, Henon, Bounded. For
    /// FiniteHarmonic it is derived (`omega^2 R^3`), never stored.
    mu: f64,
    /// Angular frequency; Harmonic and FiniteHarmonic.
    omega: f64,
    /// Core length `b`; Henon and Bounded.
    scale_b: f64,
    /// Ball radius `R`; FiniteHarmonic.
    radius_r: f64,
    /// Transvection constant of the affine offset.
    epsilon: f64,
    /// Gauge coefficient of the affine offset.
    lambda: f64,
}

/// Flat serialization mirror of [`PotentialSpec`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct PotentialSpecRepr {
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "R")]
    radius: Option<f64>,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    lambda: f64,
}

impl TryFrom<PotentialSpecRepr> for PotentialSpec {
    type Error = Error;
    fn try_from(r: PotentialSpecRepr) -> Result<Self> {
        let need = |o: Option<f64>, name: &str| {
            o.ok_or_else(|| Error::InvalidParameters(format!("missing parameter `{name}`")))
        };
        let j = AffineTransform::new(r.epsilon, r.lambda);
        let base = match r.family {
            Family::Kepler => PotentialSpec::kepler(need(r.mu, "mu")?),
            Family::Harmonic => PotentialSpec::harmonic(need(r.omega, "omega")?),
            Family::FiniteHarmonic => {
                PotentialSpec::finite_harmonic(need(r.omega, "omega")?, need(r.radius, "R")?)
            }
            Family::Henon => PotentialSpec::henon(need(r.mu, "mu")?, need(r.b, "b")?),
            Family::Bounded => PotentialSpec::bounded(need(r.mu, "mu")?, need(r.b, "b")?),
        }?;
        Ok(base.apply_affine(&j))
    }
}

impl From<PotentialSpec> for PotentialSpecRepr {
    fn from(p: PotentialSpec) -> Self {
        let (mu, omega, b, radius) = match p.family {
            Family::Kepler => (Some(p.mu), None, None, None),
            Family::Harmonic => (None, Some(p.omega), None, None),
            Family::FiniteHarmonic => (None, Some(p.omega), None, Some(p.radius_r)),
            Family::Henon | Family::Bounded => (Some(p.mu), None, Some(p.scale_b), None),
        };
        PotentialSpecRepr { family: p.family, mu, omega, b, radius, epsilon: p.epsilon, lambda: p.lambda }
    }
}

impl PotentialSpec {
    /// `psi(r) = -mu/r` with `mu > 0`.
    pub fn kepler(mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameters(format!("Kepler needs mu > 0, got {mu}")));
        }
        Ok(PotentialSpec { family: Family::Kepler, mu, omega: 0.0, scale_b: 0.0, radius_r: 0.0, epsilon: 0.0, lambda: 0.0 })
    }

    /// `psi(r) = omega^2 r^2 / 2` with `omega > 0`.
    pub fn harmonic(omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameters(format!("Harmonic needs omega > 0, got {omega}")));
        }
        Ok(PotentialSpec { family: Family::Harmonic, mu: 0.0, omega, scale_b: 0.0, radius_r: 0.0, epsilon: 0.0, lambda: 0.0 })
    }

    /// Harmonic ball of radius `R` with Kepler exterior; `mu = omega^2 R^3`.
    pub fn finite_harmonic(omega: f64, radius: f64) -> Result<Self> {
        if !(omega > 0.0 && radius > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "FiniteHarmonic needs omega > 0 and R > 0, got omega = {omega}, R = {radius}"
            )));
        }
        Ok(PotentialSpec { family: Family::FiniteHarmonic, mu: 0.0, omega, scale_b: 0.0, radius_r: radius, epsilon: 0.0, lambda: 0.0 })
    }

    /// `psi(r) = -mu/(b + sqrt(b^2 + r^2))` with `mu > 0`, `b >= 0`.
    pub fn henon(mu: f64, b: f64) -> Result<Self> {
        if !(mu > 0.0 && b >= 0.0) {
            return Err(Error::InvalidParameters(format!("Henon needs mu > 0 and b >= 0, got mu = {mu}, b = {b}")));
        }
        Ok(PotentialSpec { family: Family::Henon, mu, omega: 0.0, scale_b: b, radius_r: 0.0, epsilon: 0.0, lambda: 0.0 })
    }

    /// `psi(r) = mu/(b + sqrt(b^2 - r^2))` on `[0, b]` with `mu, b > 0`.
    pub fn bounded(mu: f64, b: f64) -> Result<Self> {
        if !(mu > 0.0 && b > 0.0) {
            return Err(Error::InvalidParameters(format!("Bounded needs mu > 0 and b > 0, got mu = {mu}, b = {b}")));
        }
        Ok(PotentialSpec { family: Family::Bounded, mu, omega: 0.0, scale_b: b, radius_r: 0.0, epsilon: 0.0, lambda: 0.0 })
    }

    /// The decreasing Henon branch: the reduced branches are exchanged by
    /// `J_{-mu/b, -4 b mu}`, which relative to the base form is an offset
    /// of `(-mu/(2b), -4 b mu)`. Closed form:
    /// `psi(r) = mu/(b - sqrt(b^2 + r^2)) - mu/(2b)`.
    pub fn henon_negative_branch(mu: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidParameters("negative branch needs b > 0".into()));
        }
        Ok(Self::henon(mu, b)?.apply_affine(&AffineTransform::new(-mu / (2.0 * b), -4.0 * b * mu)))
    }

    /// The decreasing Bounded branch: reduced branches exchanged by
    /// `J_{+mu/b, -4 b mu}`; relative to the base form the offset is
    /// `(+mu/(2b), -4 b mu)`. Closed form:
    /// `psi(r) = mu/(2b) - mu/(b - sqrt(b^2 - r^2))`.
    pub fn bounded_negative_branch(mu: f64, b: f64) -> Result<Self> {
        Ok(Self::bounded(mu, b)?.apply_affine(&AffineTransform::new(mu / (2.0 * b), -4.0 * b * mu)))
    }

    // ---- accessors ------------------------------------------------------

    pub fn family(&self) -> Family {
        self.family
    }

    /// Mass parameter: stored for Kepler/Henon/Bounded, derived
    /// `omega^2 R^3` for FiniteHarmonic, undefined (0) for Harmonic.
    pub fn mu(&self) -> f64 {
        match self.family {
            Family::FiniteHarmonic => self.omega * self.omega * self.radius_r.powi(3),
            _ => self.mu,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn scale_b(&self) -> f64 {
        self.scale_b
    }

    pub fn radius_r(&self) -> f64 {
        self.radius_r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The affine offset relative to the base family member.
    pub fn affine(&self) -> AffineTransform {
        AffineTransform::new(self.epsilon, self.lambda)
    }

    /// The same potential with the affine offset removed.
    pub fn base(&self) -> PotentialSpec {
        let mut p = *self;
        p.epsilon = 0.0;
        p.lambda = 0.0;
        p
    }

    // ---- field quantities -----------------------------------------------

    /// Evaluation domain `[0, r_max]` (`r_max = b` for Bounded, infinite
    /// otherwise).
    pub fn domain(&self) -> (f64, f64) {
        match self.family {
            Family::Bounded => (0.0, self.scale_b),
            _ => (0.0, f64::INFINITY),
        }
    }

    fn check_radius(&self, r: f64, derivative: bool) -> Result<()> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::DomainError { r, reason: "radius must be finite and nonnegative".into() });
        }
        if r == 0.0 && (self.lambda != 0.0 || self.family == Family::Kepler) {
            return Err(Error::DomainError { r, reason: "singular term at r = 0".into() });
        }
        if self.family == Family::Bounded {
            if r > self.scale_b {
                return Err(Error::DomainError { r, reason: format!("outside the bounded domain [0, {}]", self.scale_b) });
            }
            if derivative && r == self.scale_b {
                return Err(Error::DomainError { r, reason: "infinite force at the bounded-domain edge r = b".into() });
            }
        }
        Ok(())
    }

    /// Potential value `psi(r)` including the affine offset.
    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check_radius(r, false)?;
        let base = match self.family {
            Family::Kepler => -self.mu / r,
            Family::Harmonic => 0.5 * self.omega * self.omega * r * r,
            Family::FiniteHarmonic => {
                let w2 = self.omega * self.omega;
                let rr = self.radius_r;
                if r < rr {
                    0.5 * w2 * r * r - 1.5 * w2 * rr * rr
                } else {
                    -w2 * rr.powi(3) / r
                }
            }
            Family::Henon => {
                let b = self.scale_b;
                -self.mu / (b + (b * b + r * r).sqrt())
            }
            Family::Bounded => {
                let b = self.scale_b;
                self.mu / (b + (b * b - r * r).max(0.0).sqrt())
            }
        };
        let gauge = if self.lambda == 0.0 { 0.0 } else { self.lambda / (2.0 * r * r) };
        Ok(base + self.epsilon + gauge)
    }

    /// Analytic radial derivative `dpsi/dr` including the gauge term.
    pub fn eval_derivative(&self, r: f64) -> Result<f64> {
        self.check_radius(r, true)?;
        let base = match self.family {
            Family::Kepler => self.mu / (r * r),
            Family::Harmonic => self.omega * self.omega * r,
            Family::FiniteHarmonic => {
                let w2 = self.omega * self.omega;
                let rr = self.radius_r;
                if r < rr {
                    w2 * r
                } else {
                    w2 * rr.powi(3) / (r * r)
                }
            }
            Family::Henon => {
                let b = self.scale_b;
                let s = (b * b + r * r).sqrt();
                self.mu * r / (s * (b + s) * (b + s))
            }
            Family::Bounded => {
                let b = self.scale_b;
                let s = (b * b - r * r).max(0.0).sqrt();
                self.mu * r / (s * (b + s) * (b + s))
            }
        };
        let gauge = if self.lambda == 0.0 { 0.0 } else { -self.lambda / (r * r * r) };
        Ok(base + gauge)
    }

    /// Analytic second radial derivative, used by the density and by the
    /// circular-orbit limit of the radial period.
    pub fn eval_second_derivative(&self, r: f64) -> Result<f64> {
        self.check_radius(r, true)?;
        let base = match self.family {
            Family::Kepler => -2.0 * self.mu / (r * r * r),
            Family::Harmonic => self.omega * self.omega,
            Family::FiniteHarmonic => {
                let w2 = self.omega * self.omega;
                let rr = self.radius_r;
                if r < rr {
                    w2
                } else {
                    -2.0 * w2 * rr.powi(3) / (r * r * r)
                }
            }
            Family::Henon => {
                let b = self.scale_b;
                let s = (b * b + r * r).sqrt();
                self.mu * (s * s * (b + s) - r * r * (b + 3.0 * s)) / (s.powi(3) * (b + s).powi(3))
            }
            Family::Bounded => {
                let b = self.scale_b;
                let s = (b * b - r * r).max(0.0).sqrt();
                self.mu * (s * s * (b + s) + r * r * (b + 3.0 * s)) / (s.powi(3) * (b + s).powi(3))
            }
        };
        let gauge = if self.lambda == 0.0 { 0.0 } else { 3.0 * self.lambda / (r * r * r * r) };
        Ok(base + gauge)
    }

    /// Apply an affine transform, returning the shifted potential.
    pub fn apply_affine(&self, j: &AffineTransform) -> PotentialSpec {
        let mut p = *self;
        p.epsilon += j.epsilon;
        p.lambda += j.lambda;
        p
    }

    /// Enclosed gravitating mass `G M(r) = r^2 psi'(r)` (Gauss' theorem).
    ///
    /// Only physically meaningful for `lambda = 0`; a gauged potential
    /// contributes an unphysical central term, which is returned as-is.
    pub fn mass_profile(&self, r: f64) -> Result<f64> {
        Ok(r * r * self.eval_derivative(r)?)
    }

    /// Local density from the spherical Poisson equation,
    /// `rho = (psi'' + 2 psi'/r) / (4 pi)`.
    pub fn density(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::DomainError { r, reason: "density needs r > 0".into() });
        }
        let d1 = self.eval_derivative(r)?;
        let d2 = self.eval_second_derivative(r)?;
        Ok((d2 + 2.0 * d1 / r) / (4.0 * std::f64::consts::PI))
    }

    /// The limiting potential value at the domain supremum: the escape
    /// energy for unbounded domains, `psi(b)` for the Bounded family.
    pub fn psi_infinity(&self) -> f64 {
        match self.family {
            Family::Kepler | Family::Henon | Family::FiniteHarmonic => self.epsilon,
            Family::Harmonic => f64::INFINITY,
            Family::Bounded => {
                let b = self.scale_b;
                self.mu / b + self.epsilon + if self.lambda == 0.0 { 0.0 } else { self.lambda / (2.0 * b * b) }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn eval_matches_definition_values() {
        assert_relative_eq!(PotentialSpec::kepler(1.0).unwrap().eval(2.0).unwrap(), -0.5);
        // sqrt(b^2 + 0) = b, so the Henon value at the center is -mu/(2b).
        assert_relative_eq!(PotentialSpec::henon(1.0, 1.0).unwrap().eval(0.0).unwrap(), -0.5);
        // sqrt(b^2 - b^2) = 0, so the Bounded value at the edge is mu/b.
        assert_relative_eq!(PotentialSpec::bounded(1.0, 1.0).unwrap().eval(1.0).unwrap(), 1.0);
        assert_relative_eq!(PotentialSpec::harmonic(2.0).unwrap().eval(3.0).unwrap(), 18.0);
    }

    #[test]
    fn derivative_examples_and_fd_consistency() {
        assert_relative_eq!(PotentialSpec::kepler(1.0).unwrap().eval_derivative(1.0).unwrap(), 1.0);
        assert_relative_eq!(PotentialSpec::harmonic(2.0).unwrap().eval_derivative(3.0).unwrap(), 12.0);

        let pots = [
            PotentialSpec::kepler(1.3).unwrap(),
            PotentialSpec::harmonic(0.7).unwrap(),
            PotentialSpec::finite_harmonic(1.1, 2.0).unwrap(),
            PotentialSpec::henon(1.0, 1.0).unwrap(),
            PotentialSpec::bounded(1.0, 2.0).unwrap(),
            PotentialSpec::henon(2.0, 0.5).unwrap().apply_affine(&AffineTransform::new(0.3, 0.7)),
        ];
        for p in &pots {
            let (_, hi) = p.domain();
            let top = if hi.is_finite() { 0.9 * hi } else { 5.0 };
            for r in grid(0.1, top, 37) {
                // Keep away from the FiniteHarmonic matching radius where
                // the second derivative jumps.
                if p.family() == Family::FiniteHarmonic && (r - p.radius_r()).abs() < 0.2 {
                    continue;
                }
                let f = |x: f64| p.eval(x).unwrap();
                let fd1 = crate::numerics::fd::d1(&f, r, r);
                let an1 = p.eval_derivative(r).unwrap();
                assert_relative_eq!(an1, fd1, max_relative = 1e-6, epsilon = 1e-9);
                let fd2 = crate::numerics::fd::d2(&f, r, r);
                let an2 = p.eval_second_derivative(r).unwrap();
                assert_relative_eq!(an2, fd2, max_relative = 1e-5, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn base_families_are_strictly_increasing() {
        let pots = [
            PotentialSpec::kepler(1.0).unwrap(),
            PotentialSpec::harmonic(1.0).unwrap(),
            PotentialSpec::finite_harmonic(1.0, 1.0).unwrap(),
            PotentialSpec::henon(1.0, 1.0).unwrap(),
            PotentialSpec::bounded(1.0, 1.0).unwrap(),
        ];
        for p in &pots {
            let (_, hi) = p.domain();
            let top = if hi.is_finite() { hi * (1.0 - 1e-9) } else { 50.0 };
            for r in grid(1e-3, top, 1000) {
                assert!(p.eval_derivative(r).unwrap() > 0.0, "{p:?} not increasing at r = {r}");
            }
        }
    }

    #[test]
    fn affine_group_action_and_gauge_identity() {
        let psi = PotentialSpec::henon(1.0, 1.0).unwrap();
        let j1 = AffineTransform::new(0.4, -0.2);
        let j2 = AffineTransform::new(-1.1, 0.9);
        let seq = psi.apply_affine(&j1).apply_affine(&j2);
        let combined = psi.apply_affine(&j1.compose(&j2));
        assert_eq!(seq, combined);
        assert_eq!(psi.apply_affine(&AffineTransform::IDENTITY), psi);
        for r in grid(0.1, 10.0, 100) {
            let lhs = psi.apply_affine(&j1).eval(r).unwrap() - psi.eval(r).unwrap();
            let rhs = j1.epsilon + j1.lambda / (2.0 * r * r);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13, epsilon = 1e-13);
        }
    }

    #[test]
    fn reduced_henon_shift_reaches_zero_at_center() {
        // J_{mu/(2b), 0} applied to the Henon base gives the reduced form,
        // which vanishes at r = 0.
        let p = PotentialSpec::henon(1.0, 1.0).unwrap().apply_affine(&AffineTransform::new(0.5, 0.0));
        assert_relative_eq!(p.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn confluence_to_harmonic_for_large_core() {
        // Reduced Henon and Bounded potentials approach mu r^2 / (8 b^3).
        for (mk, sign) in [(PotentialSpec::henon as fn(f64, f64) -> Result<PotentialSpec>, 1.0), (PotentialSpec::bounded, -1.0)] {
            let b = 1.0e3;
            let mu = 1.0;
            let p = mk(mu, b).unwrap().apply_affine(&AffineTransform::new(sign * mu / (2.0 * b), 0.0));
            for r in grid(0.05, 1.0, 20) {
                let ratio = p.eval(r).unwrap() / (mu * r * r / (8.0 * b.powi(3)));
                assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio} at r = {r}");
            }
        }
    }

    #[test]
    fn mass_profile_limits() {
        let kep = PotentialSpec::kepler(3.0).unwrap();
        assert_relative_eq!(kep.mass_profile(17.0).unwrap(), 3.0, max_relative = 1e-12);
        // GM_he(r) -> mu with a leading 2b/r deviation, so the approach is
        // first-order in b/r.
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        assert_relative_eq!(hen.mass_profile(1.0e4).unwrap(), 1.0, max_relative = 3e-4);
        assert_relative_eq!(hen.mass_profile(1.0e8).unwrap(), 1.0, max_relative = 1e-7);
        // Near the bounded edge GM(r) ~ mu sqrt(b / (2 (b - r))).
        let bo = PotentialSpec::bounded(1.0, 1.0).unwrap();
        let r: f64 = 0.999;
        let asym = 1.0 * (1.0 / (2.0 * (1.0 - r))).sqrt();
        let ratio = bo.mass_profile(r).unwrap() / asym;
        // The correction is O(sqrt(b - r)), so expect ~10% at 1e-3 from
        // the edge and convergence as the edge is approached.
        assert!((ratio - 1.0).abs() < 0.1, "asymptotic ratio {ratio}");
        let r2: f64 = 0.999999;
        let asym2 = (1.0 / (2.0 * (1.0 - r2))).sqrt();
        let ratio2 = bo.mass_profile(r2).unwrap() / asym2;
        assert!((ratio2 - 1.0).abs() < (ratio - 1.0).abs());
    }

    #[test]
    fn density_examples() {
        let kep = PotentialSpec::kepler(1.0).unwrap();
        for r in [0.5, 1.0, 7.0] {
            assert!(kep.density(r).unwrap().abs() < 1e-14);
        }
        let ha = PotentialSpec::harmonic(2.0).unwrap();
        let expect = 3.0 * 4.0 / (4.0 * std::f64::consts::PI);
        assert_relative_eq!(ha.density(0.3).unwrap(), expect, max_relative = 1e-12);
        // Henon halo falls like r^-4: local log-slope near -4 at r = 1e3.
        let hen = PotentialSpec::henon(1.0, 1.0).unwrap();
        let r = 1.0e3;
        let slope = (hen.density(r * 1.01).unwrap().ln() - hen.density(r / 1.01).unwrap().ln())
            / ((r * 1.01).ln() - (r / 1.01).ln());
        assert!((slope + 4.0).abs() < 0.05, "log-slope {slope}");
    }

    #[test]
    fn domain_and_errors() {
        let bo = PotentialSpec::bounded(1.0, 2.0).unwrap();
        assert_eq!(bo.domain(), (0.0, 2.0));
        assert!(matches!(bo.eval(2.5), Err(Error::DomainError { .. })));
        // The edge value exists but the force there is infinite.
        assert!(bo.eval(2.0).is_ok());
        assert!(matches!(bo.eval_derivative(2.0), Err(Error::DomainError { .. })));
        let kep = PotentialSpec::kepler(1.0).unwrap();
        assert!(matches!(kep.eval(0.0), Err(Error::DomainError { .. })));
        assert_eq!(PotentialSpec::henon(1.0, 1.0).unwrap().domain().1, f64::INFINITY);
    }

    #[test]
    fn finite_harmonic_is_continuous_and_c1_at_the_matching_radius() {
        let p = PotentialSpec::finite_harmonic(1.3, 2.0).unwrap();
        let below = p.eval(2.0 - 1e-12).unwrap();
        let above = p.eval(2.0 + 1e-12).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-9);
        let db = p.eval_derivative(2.0 - 1e-12).unwrap();
        let da = p.eval_derivative(2.0 + 1e-12).unwrap();
        assert_relative_eq!(db, da, max_relative = 1e-9);
        assert_relative_eq!(p.mu(), 1.3 * 1.3 * 8.0, max_relative = 1e-14);
    }

    #[test]
    fn negative_branch_constructors_match_closed_forms() {
        let (mu, b) = (1.0, 1.0);
        let hm = PotentialSpec::henon_negative_branch(mu, b).unwrap();
        for r in [0.5, 1.0, 3.0] {
            let s = (b * b + r * r).sqrt();
            let direct = mu / (b - s) - mu / (2.0 * b);
            assert_relative_eq!(hm.eval(r).unwrap(), direct, max_relative = 1e-12);
        }
        // The decreasing branch tends to -mu/(2b) at infinity.
        assert_relative_eq!(hm.eval(1.0e9).unwrap(), -0.5, epsilon = 1e-8);
        let bm = PotentialSpec::bounded_negative_branch(mu, b).unwrap();
        for r in [0.3, 0.8] {
            let s = (b * b - r * r).sqrt();
            let direct = mu / (2.0 * b) - mu / (b - s);
            assert_relative_eq!(bm.eval(r).unwrap(), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn serde_round_trip_is_flat_and_lossless() {
        let p = PotentialSpec::henon(1.5, 0.8).unwrap().apply_affine(&AffineTransform::new(0.25, -0.5));
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"family\":\"Henon\""));
        assert!(json.contains("\"b\":0.8"));
        let back: PotentialSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }
}
