//! Parabolas in the Henon plane and the geometric classification pipeline.
//!
//! In Henon's variables `x = 2 r^2`, `Y(x) = x psi(sqrt(x/2))` every
//! isochrone potential traces a parabola
//!
//! ```text
//! (a x + b Y)^2 + c x + d Y + e = 0,    (a, b) != (0, 0),
//! ```
//!
//! and conversely every non-degenerate parabola with a convex increasing
//! branch through positive `x` is the curve of an isochrone potential up to
//! an affine change `J_{eps,lam}`. This module implements:
//!
//! - [`Parabola`] — canonical conic coefficients with the affine and linear
//!   group actions;
//! - [`Parabola::reduce`] — the reduction pipeline: translate the curve
//!   through the origin, split off straight (harmonic), laid (Kepler) and
//!   tilted (Henon/Bounded) cases, and recover family parameters together
//!   with the affine offset;
//! - [`Parabola::rotate`] and [`Parabola::tangent_and_axis`] — rotations
//!   about the origin and the frame directions used by the transformation
//!   algebra;
//! - [`check_property_p`] — the chord-width criterion: a smooth strictly
//!   convex/concave curve is a parabola iff the width `x_a - x_p` of the
//!   chord cut at signed height `lambda` above the tangent grows exactly
//!   like `sqrt(lambda)`;
//! - [`parabola_ode_residual`] — the universal parabola differential
//!   equation `5 (f''')^2 = 3 f'''' f''`, evaluated as a residual.

use crate::error::{Error, Result};
use crate::numerics::{fd, roots};
use crate::potentials::{AffineTransform, Family, PotentialSpec};
use serde::{Deserialize, Serialize};

/// Relative threshold below which the `b` coefficient counts as zero
/// (straight parabola, vertical symmetry axis). The canonical scale makes
/// `a^2 + b^2 = 1`, so this is an absolute comparison.
const STRAIGHT_TOL: f64 = 1e-9;

/// Relative threshold below which the translated `d` coefficient counts as
/// zero (vertical tangent at the origin, Keplerian case). Sized between the
/// rounding noise of the translation root (~1e-8 relative in the worst
/// conditioned cases) and the smallest genuine tilted-family value on the
/// tested parameter ranges (~1e-4 relative).
const LAID_TOL: f64 = 1e-6;

/// A non-degenerate parabola `(a x + b Y)^2 + c x + d Y + e = 0` in
/// canonical normalization: `a^2 + b^2 = 1` with the first nonzero of
/// `(a, b)` positive. Coefficient sets related by `(a,b) -> t(a,b)`,
/// `(c,d,e) -> t^2 (c,d,e)` describe the same curve and normalize
/// identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParabolaRepr", into = "ParabolaRepr")]
pub struct Parabola {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
}

/// Serialization mirror; deserialization re-validates and canonicalizes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ParabolaRepr {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
}

impl TryFrom<ParabolaRepr> for Parabola {
    type Error = Error;
    fn try_from(r: ParabolaRepr) -> Result<Self> {
        Parabola::from_coeffs(r.a, r.b, r.c, r.d, r.e)
    }
}

impl From<Parabola> for ParabolaRepr {
    fn from(p: Parabola) -> Self {
        ParabolaRepr { a: p.a, b: p.b, c: p.c, d: p.d, e: p.e }
    }
}

/// The reduced family of a classified parabola. `Plus` variants carry the
/// increasing (physical) branch through the origin, `Minus` variants the
/// decreasing one; `NonPhysical` covers bottom-oriented straight and
/// left-laid parabolas, which admit no increasing branch at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducedFamily {
    Kepler,
    Harmonic,
    HenonPlus,
    HenonMinus,
    BoundedPlus,
    BoundedMinus,
    NonPhysical,
}

impl std::fmt::Display for ReducedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ReducedFamily::Kepler => "Kepler",
            ReducedFamily::Harmonic => "Harmonic",
            ReducedFamily::HenonPlus => "HenonPlus",
            ReducedFamily::HenonMinus => "HenonMinus",
            ReducedFamily::BoundedPlus => "BoundedPlus",
            ReducedFamily::BoundedMinus => "BoundedMinus",
            ReducedFamily::NonPhysical => "NonPhysical",
        };
        f.write_str(s)
    }
}

/// Result of [`Parabola::reduce`]: the reduced family, its parameters, and
/// the affine element such that `input = J_{epsilon,lambda}(reduced)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub family: ReducedFamily,
    /// Mass parameter of the reduced member (Kepler, Henon, Bounded).
    pub mu: Option<f64>,
    /// Angular frequency of the reduced member (Harmonic).
    pub omega: Option<f64>,
    /// Core length of the reduced member (Henon, Bounded).
    pub scale_b: Option<f64>,
    /// The `(epsilon, lambda)` with `input = J_{epsilon,lambda}(reduced)`.
    pub affine: AffineTransform,
    /// Whether the branch through the origin is the convex increasing one
    /// (the branch that carries a physical potential).
    pub increasing_branch: bool,
}

impl ClassificationResult {
    /// Rebuild the canonical parabola from the family, parameters, and
    /// affine offset. `NonPhysical` results are not reconstructible.
    pub fn reconstruct(&self) -> Result<Parabola> {
        let reduced = match self.family {
            ReducedFamily::Kepler => {
                let mu = self.mu.ok_or_else(missing_param)?;
                Parabola::from_coeffs(0.0, 1.0, -2.0 * mu * mu, 0.0, 0.0)?
            }
            ReducedFamily::Harmonic => {
                let om = self.omega.ok_or_else(missing_param)?;
                Parabola::from_coeffs(0.5 * om, 0.0, 0.0, -1.0, 0.0)?
            }
            ReducedFamily::HenonPlus | ReducedFamily::HenonMinus | ReducedFamily::BoundedPlus | ReducedFamily::BoundedMinus => {
                let mu = self.mu.ok_or_else(missing_param)?;
                let b = self.scale_b.ok_or_else(missing_param)?;
                let m = mu / (2.0 * b);
                let n = 4.0 * b * mu;
                // The tilted reduced conic is (Y - m x)^2 = n Y with
                // m > 0, n > 0 for HenonPlus; the other three variants
                // flip the signs of m and/or n.
                let (m, n) = match self.family {
                    ReducedFamily::HenonPlus => (m, n),
                    ReducedFamily::HenonMinus => (-m, -n),
                    ReducedFamily::BoundedPlus => (-m, n),
                    ReducedFamily::BoundedMinus => (m, -n),
                    _ => unreachable!(),
                };
                Parabola::from_coeffs(-m, 1.0, 0.0, -n, 0.0)?
            }
            ReducedFamily::NonPhysical => {
                return Err(Error::NotIsochrone("non-physical parabola has no canonical reduced form".into()));
            }
        };
        reduced.apply_affine(&self.affine)
    }

    /// Convert the classification into a [`PotentialSpec`]: the reduced
    /// family's base member plus the total affine offset (the classifier's
    /// offset composed with the family's own reduced-form shift).
    pub fn to_potential_spec(&self) -> Result<PotentialSpec> {
        let j = self.affine;
        match self.family {
            ReducedFamily::Kepler => {
                Ok(PotentialSpec::kepler(self.mu.ok_or_else(missing_param)?)?.apply_affine(&j))
            }
            ReducedFamily::Harmonic => {
                Ok(PotentialSpec::harmonic(self.omega.ok_or_else(missing_param)?)?.apply_affine(&j))
            }
            ReducedFamily::HenonPlus | ReducedFamily::HenonMinus => {
                let mu = self.mu.ok_or_else(missing_param)?;
                let b = self.scale_b.ok_or_else(missing_param)?;
                // Reduced form = J_{mu/2b, 0}(base); decreasing branch
                // additionally picks up the branch-exchange offset.
                let shift = match self.family {
                    ReducedFamily::HenonPlus => AffineTransform::new(mu / (2.0 * b), 0.0),
                    _ => AffineTransform::new(-mu / (2.0 * b), -4.0 * b * mu),
                };
                Ok(PotentialSpec::henon(mu, b)?.apply_affine(&shift.compose(&j)))
            }
            ReducedFamily::BoundedPlus | ReducedFamily::BoundedMinus => {
                let mu = self.mu.ok_or_else(missing_param)?;
                let b = self.scale_b.ok_or_else(missing_param)?;
                let shift = match self.family {
                    ReducedFamily::BoundedPlus => AffineTransform::new(-mu / (2.0 * b), 0.0),
                    _ => AffineTransform::new(mu / (2.0 * b), -4.0 * b * mu),
                };
                Ok(PotentialSpec::bounded(mu, b)?.apply_affine(&shift.compose(&j)))
            }
            ReducedFamily::NonPhysical => {
                Err(Error::NotIsochrone("no increasing branch: not the curve of a physical potential".into()))
            }
        }
    }
}

fn missing_param() -> Error {
    Error::InvalidParameters("classification result lacks the parameters of its family".into())
}

impl Parabola {
    /// Build a canonical parabola from raw coefficients, rejecting
    /// degenerate conics (quadratic part vanishing, or linear part
    /// proportional to the squared bracket, which factors the conic into
    /// parallel lines).
    pub fn from_coeffs(a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<Parabola> {
        for v in [a, b, c, d, e] {
            if !v.is_finite() {
                return Err(Error::DegenerateParabola("non-finite coefficient".into()));
            }
        }
        let n = a.hypot(b);
        if n == 0.0 {
            return Err(Error::DegenerateParabola("quadratic part vanishes: a = b = 0".into()));
        }
        let mut t = 1.0 / n;
        // Sign convention: first nonzero of (a, b) positive, with a small
        // tolerance on `a` so that rounding residue of an exact zero does
        // not flip the normalization of the whole coefficient set.
        let flip = if a.abs() > 1e-12 * n { a < 0.0 } else { b < 0.0 };
        if flip {
            t = -t;
        }
        let p = Parabola { a: a * t, b: b * t, c: c * t * t, d: d * t * t, e: e * t * t };
        // Degeneracy: (c, d) proportional to (a, b) (covers c = d = 0).
        // The bilinear invariant c b - d a is preserved by the affine
        // action, so this check holds throughout the pipeline.
        let lin = (p.c * p.b - p.d * p.a).abs();
        if lin <= 1e-12 * (p.c.abs() + p.d.abs()).max(1e-12) {
            return Err(Error::DegenerateParabola(format!(
                "linear part ({}, {}) is proportional to the quadratic bracket ({}, {})",
                p.c, p.d, p.a, p.b
            )));
        }
        Ok(p)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn e(&self) -> f64 {
        self.e
    }

    /// The conic form evaluated at a point (zero on the curve).
    pub fn residual(&self, x: f64, y: f64) -> f64 {
        let u = self.a * x + self.b * y;
        u * u + self.c * x + self.d * y + self.e
    }

    /// Residual scaled by the magnitudes of the individual terms, so that
    /// points on the curve score near machine precision regardless of how
    /// large the coordinates are.
    pub fn relative_residual(&self, x: f64, y: f64) -> f64 {
        let u = self.a * x + self.b * y;
        let scale = (u * u).abs() + (self.c * x).abs() + (self.d * y).abs() + self.e.abs();
        self.residual(x, y).abs() / scale.max(1e-300)
    }

    /// Image under the affine element `J_{eps,lam}: (x, Y) -> (x, Y + eps x
    /// + lam)`.
    pub fn apply_affine(&self, j: &AffineTransform) -> Result<Parabola> {
        self.transvect(j.epsilon)?.translate(j.lambda)
    }

    /// Image under the shear `(x, Y) -> (x, Y + eps x)`.
    fn transvect(&self, eps: f64) -> Result<Parabola> {
        Parabola::from_coeffs(self.a - self.b * eps, self.b, self.c - self.d * eps, self.d, self.e)
    }

    /// Image under the vertical translation `(x, Y) -> (x, Y + lam)`.
    fn translate(&self, lam: f64) -> Result<Parabola> {
        Parabola::from_coeffs(
            self.a,
            self.b,
            self.c - 2.0 * self.a * self.b * lam,
            self.d - 2.0 * self.b * self.b * lam,
            self.e - self.d * lam + self.b * self.b * lam * lam,
        )
    }

    /// Image of the curve under an invertible linear map `m` (row-major
    /// `[[m00, m01], [m10, m11]]` acting on column vectors `(x, Y)`).
    pub fn apply_linear(&self, m: &[[f64; 2]; 2]) -> Result<Parabola> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::DegenerateParabola("singular linear map".into()));
        }
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        // Substituting (x, Y) -> M^{-1}(x, Y) acts on the row vectors
        // (a, b) and (c, d) by right-multiplication with M^{-1}.
        let a = self.a * inv[0][0] + self.b * inv[1][0];
        let b = self.a * inv[0][1] + self.b * inv[1][1];
        let c = self.c * inv[0][0] + self.d * inv[1][0];
        let d = self.c * inv[0][1] + self.d * inv[1][1];
        Parabola::from_coeffs(a, b, c, d, self.e)
    }

    /// Rotation of the curve by `theta` about the origin.
    pub fn rotate(&self, theta: f64) -> Result<Parabola> {
        let (s, co) = theta.sin_cos();
        self.apply_linear(&[[co, -s], [s, co]])
    }

    /// Whether the curve passes through the origin (canonical `|e|`).
    pub fn passes_through_origin(&self) -> bool {
        self.e.abs() < 1e-12 * (1.0 + self.c.abs() + self.d.abs())
    }

    /// Unit tangent direction at the origin and unit symmetry-axis
    /// direction. The tangent is the direction of the line
    /// `c x + d Y = 0` (the conic gradient at the origin is `(c, d)`),
    /// the axis is the null direction `(-b, a)` of the quadratic part.
    /// Both are sign-normalized with their first nonzero component
    /// positive.
    pub fn tangent_and_axis(&self) -> Result<([f64; 2], [f64; 2])> {
        if !self.passes_through_origin() {
            return Err(Error::NotThroughOrigin { e_abs: self.e.abs() });
        }
        Ok((unit_dir(self.d, -self.c), unit_dir(-self.b, self.a)))
    }

    /// Classify the parabola: translate it through the origin, reduce by a
    /// transvection, and identify the reduced family and parameters.
    ///
    /// When the vertical-translation quadratic `4 b^2 l^2 + 2 d l + e = 0`
    /// has two roots, the root whose origin branch is convex increasing
    /// (the physical branch) is preferred; decreasing-branch (`Minus`) and
    /// `NonPhysical` classifications are only returned when no root gives a
    /// physical branch.
    pub fn reduce(&self) -> Result<ClassificationResult> {
        let mut candidates: Vec<(f64, Candidate)> = Vec::new();
        for l in self.translation_roots()? {
            let translated = self.translate(-2.0 * l)?;
            candidates.push((l, classify_translated(&translated)?));
        }
        // Rank: physical branch first, then decreasing branch, then
        // non-physical; ties broken by the smaller translation.
        candidates.sort_by(|(l1, c1), (l2, c2)| {
            (c1.rank(), l1.abs()).partial_cmp(&(c2.rank(), l2.abs())).unwrap()
        });
        let (l, cand) = candidates.into_iter().next().expect("at least one translation root");
        let result = ClassificationResult {
            family: cand.family,
            mu: cand.mu,
            omega: cand.omega,
            scale_b: cand.scale_b,
            affine: AffineTransform::new(-cand.eps_applied, 2.0 * l),
            increasing_branch: cand.rank() == 0,
        };
        // Self-check: the classification must reproduce the input.
        if result.family != ReducedFamily::NonPhysical {
            let back = result.reconstruct()?;
            let tol = 1e-10;
            let close = |u: f64, v: f64| (u - v).abs() <= tol * (1.0 + u.abs().max(v.abs()));
            if !(close(back.a, self.a)
                && close(back.b, self.b)
                && close(back.c, self.c)
                && close(back.d, self.d)
                && close(back.e, self.e))
            {
                return Err(Error::DegenerateParabola(format!(
                    "classification failed the reconstruction check: {back:?} vs {self:?}"
                )));
            }
        }
        Ok(result)
    }

    /// The real roots `l` of `4 b^2 l^2 + 2 d l + e = 0`; translating by
    /// `-2 l` moves the corresponding vertical-axis intersection of the
    /// curve to the origin.
    fn translation_roots(&self) -> Result<Vec<f64>> {
        let b2 = self.b * self.b;
        if self.b.abs() < STRAIGHT_TOL {
            // Straight parabola: the equation is linear in l.
            if self.d == 0.0 {
                return Err(Error::DegenerateParabola("straight parabola with d = 0".into()));
            }
            return Ok(vec![-self.e / (2.0 * self.d)]);
        }
        let (aa, bb, cc) = (4.0 * b2, 2.0 * self.d, self.e);
        let mut disc = bb * bb - 4.0 * aa * cc;
        // Laid parabolas touch the vertical axis in a double point, so
        // their discriminant is exactly zero; rounding smears it into a
        // band around zero which must be snapped back, or the spurious
        // square root would masquerade as a tiny tilted-family `d`
        // coefficient downstream.
        let noise = 1e-12 * (bb * bb + (4.0 * aa * cc).abs());
        if disc.abs() < noise {
            disc = 0.0;
        }
        if disc < 0.0 {
            return Err(Error::AmbiguousRoot);
        }
        if disc == 0.0 {
            return Ok(vec![-bb / (2.0 * aa)]);
        }
        if bb == 0.0 {
            let r = (disc.sqrt() / (2.0 * aa)).sqrt();
            let r = if cc <= 0.0 { (-cc / aa).sqrt() } else { r };
            return Ok(vec![r, -r]);
        }
        // Numerically stable quadratic roots.
        let q = -0.5 * (bb + disc.sqrt().copysign(bb));
        let r1 = q / aa;
        let r2 = if q != 0.0 { cc / q } else { r1 };
        Ok(vec![r1, r2])
    }

    /// The explicit branch `x -> Y(x)` of the parabola (`upper` selects the
    /// `+sqrt` branch of the quadratic in `Y`; for straight parabolas the
    /// curve is single-valued and the flag is ignored). The returned
    /// sampler provides analytic derivatives through fourth order.
    pub fn branch(&self, upper: bool) -> ParabolaBranch {
        ParabolaBranch { p: *self, upper }
    }

    /// The branch passing closest to the point `(x, y)`.
    pub fn branch_through(&self, x: f64, y: f64) -> ParabolaBranch {
        let up = self.branch(true);
        let lo = self.branch(false);
        let du = (up.value(x) - y).abs();
        let dl = (lo.value(x) - y).abs();
        if du <= dl {
            up
        } else {
            lo
        }
    }
}

/// Unit vector along `(x, y)` with the first nonzero component positive.
fn unit_dir(x: f64, y: f64) -> [f64; 2] {
    let n = x.hypot(y);
    let s = if x < -1e-14 * n || (x.abs() <= 1e-14 * n && y < 0.0) { -1.0 } else { 1.0 };
    [s * x / n, s * y / n]
}

/// Intermediate classification of an origin-passing parabola.
struct Candidate {
    family: ReducedFamily,
    mu: Option<f64>,
    omega: Option<f64>,
    scale_b: Option<f64>,
    /// The transvection applied to reach the reduced form (so the input
    /// origin-passing parabola is `J_{-eps_applied, 0}` of the reduced
    /// one).
    eps_applied: f64,
}

impl Candidate {
    fn rank(&self) -> u8 {
        match self.family {
            ReducedFamily::Kepler
            | ReducedFamily::Harmonic
            | ReducedFamily::HenonPlus
            | ReducedFamily::BoundedPlus => 0,
            ReducedFamily::HenonMinus | ReducedFamily::BoundedMinus => 1,
            ReducedFamily::NonPhysical => 2,
        }
    }
}

/// Classify a parabola already passing through the origin.
fn classify_translated(p: &Parabola) -> Result<Candidate> {
    let none = Candidate { family: ReducedFamily::NonPhysical, mu: None, omega: None, scale_b: None, eps_applied: 0.0 };
    if p.b.abs() < STRAIGHT_TOL {
        // Straight parabola (vertical axis): Y = -(a^2 x^2 + c x)/d.
        // An increasing potential needs the x^2 coefficient positive,
        // i.e. d < 0; bottom-oriented (d > 0) is non-physical.
        let eps = p.c / p.d;
        if p.d < 0.0 {
            let omega = 2.0 * p.a.abs() / (-p.d).sqrt();
            return Ok(Candidate {
                family: ReducedFamily::Harmonic,
                mu: None,
                omega: Some(omega),
                scale_b: None,
                eps_applied: eps,
            });
        }
        return Ok(Candidate { eps_applied: eps, ..none });
    }
    if p.d.abs() < LAID_TOL * (p.c.abs() + p.d.abs()) {
        // Vertical tangent at the origin: a laid parabola. Shear away the
        // cross term; Y^2 = (-c/b^2) x remains.
        let eps = p.a / p.b;
        if p.c < 0.0 {
            let mu = (-p.c / (2.0 * p.b * p.b)).sqrt();
            return Ok(Candidate {
                family: ReducedFamily::Kepler,
                mu: Some(mu),
                omega: None,
                scale_b: None,
                eps_applied: eps,
            });
        }
        // Left-laid: no branch for x > 0.
        return Ok(Candidate { eps_applied: eps, ..none });
    }
    // Tilted parabola: shear away the linear x term, leaving the reduced
    // conic (Y - m x)^2 = n Y with m = -a'/b and curvature ratio
    // kappa = a' b / d = m / n (both scale-invariant).
    let eps = p.c / p.d;
    let a2 = p.a - p.b * eps;
    if a2.abs() < 1e-12 * (p.a.abs() + (p.b * eps).abs()).max(1e-12) {
        return Err(Error::DegenerateParabola("transvection collapsed the quadratic cross term".into()));
    }
    let kappa = a2 * p.b / p.d;
    let m = -a2 / p.b;
    let scale_b = 1.0 / (8.0 * kappa.abs()).sqrt();
    let mu = 2.0 * scale_b * m.abs();
    let family = if kappa > 0.0 {
        if m > 0.0 {
            ReducedFamily::HenonPlus
        } else {
            ReducedFamily::HenonMinus
        }
    } else if m < 0.0 {
        ReducedFamily::BoundedPlus
    } else {
        ReducedFamily::BoundedMinus
    };
    Ok(Candidate { family, mu: Some(mu), omega: None, scale_b: Some(scale_b), eps_applied: eps })
}

/// Build the Henon-plane curve of a potential.
///
/// Base-family coefficients (with the affine offset folded in through the
/// coefficient-level group action):
///
/// - Kepler: `Y^2 = 2 mu^2 x`, i.e. `(0, 1, -2 mu^2, 0, 0)`;
/// - Harmonic: `(omega x / 2)^2 = Y`, i.e. `(omega/2, 0, 0, -1, 0)`;
/// - Henon (reduced): `(Y - (mu/2b) x)^2 = 4 b mu Y`;
/// - Bounded (reduced): `(Y + (mu/2b) x)^2 = 4 b mu Y`.
///
/// The finite harmonic ball is piecewise (two parabola arcs glued at the
/// matching radius) and has no single conic; it is rejected.
pub fn to_henon_curve(psi: &PotentialSpec) -> Result<Parabola> {
    let j = psi.affine();
    match psi.family() {
        Family::Kepler => {
            let mu = psi.mu();
            Parabola::from_coeffs(0.0, 1.0, -2.0 * mu * mu, 0.0, 0.0)?.apply_affine(&j)
        }
        Family::Harmonic => {
            let om = psi.omega();
            Parabola::from_coeffs(0.5 * om, 0.0, 0.0, -1.0, 0.0)?.apply_affine(&j)
        }
        Family::Henon | Family::Bounded => {
            let mu = psi.mu();
            let b = psi.scale_b();
            if psi.family() == Family::Henon && b == 0.0 {
                // The zero-core Henon potential is exactly Keplerian.
                return Parabola::from_coeffs(0.0, 1.0, -2.0 * mu * mu, 0.0, 0.0)?.apply_affine(&j);
            }
            let m = mu / (2.0 * b);
            let (sign, shift) = if psi.family() == Family::Henon { (1.0, -m) } else { (-1.0, m) };
            // Reduced conic, then undo the family's reduced-form shift and
            // apply the stored offset: base = J_{-(+-m), 0}(reduced).
            let reduced = Parabola::from_coeffs(-sign * m, 1.0, 0.0, -4.0 * b * mu, 0.0)?;
            reduced.apply_affine(&AffineTransform::new(shift, 0.0).compose(&j))
        }
        Family::FiniteHarmonic => Err(Error::DegenerateParabola(
            "the finite harmonic ball is piecewise in the Henon plane; it has no single conic".into(),
        )),
    }
}

/// An explicit branch `x -> Y(x)` of a [`Parabola`] with analytic
/// derivatives; see [`Parabola::branch`].
#[derive(Debug, Clone, Copy)]
pub struct ParabolaBranch {
    p: Parabola,
    upper: bool,
}

impl ParabolaBranch {
    /// Branch value at `x` (NaN outside the branch domain).
    pub fn value(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    /// Value and first four derivatives of the branch at `x`.
    ///
    /// Solving the conic for `Y` gives `Y(x) = (-(2 a b x + d) +- sqrt(P x
    /// + Q)) / (2 b^2)` with `P = 4 a b d - 4 b^2 c` and `Q = d^2 - 4 b^2
    /// e`; the discriminant is linear in `x`, so all derivatives are
    /// elementary. Straight parabolas (`b = 0`) are quadratic polynomials
    /// in `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 5] {
        let (a, b, c, d, e) = (self.p.a, self.p.b, self.p.c, self.p.d, self.p.e);
        if b.abs() < STRAIGHT_TOL {
            let y = -(a * a * x * x + c * x + e) / d;
            let y1 = -(2.0 * a * a * x + c) / d;
            let y2 = -2.0 * a * a / d;
            return [y, y1, y2, 0.0, 0.0];
        }
        let sg = if self.upper { 1.0 } else { -1.0 };
        let pp = 4.0 * a * b * d - 4.0 * b * b * c;
        let q = d * d - 4.0 * b * b * e;
        let s = (pp * x + q).max(0.0).sqrt();
        let inv = 1.0 / (2.0 * b * b);
        let y = (-(2.0 * a * b * x + d) + sg * s) * inv;
        let y1 = (-2.0 * a * b + sg * pp / (2.0 * s)) * inv;
        let y2 = -sg * pp * pp / (4.0 * s.powi(3)) * inv;
        let y3 = sg * 3.0 * pp.powi(3) / (8.0 * s.powi(5)) * inv;
        let y4 = -sg * 15.0 * pp.powi(4) / (16.0 * s.powi(7)) * inv;
        [y, y1, y2, y3, y4]
    }
}

/// A four-times-differentiable curve sampler for the universal parabola
/// ODE. Implementors may supply analytic derivatives; the default falls
/// back to Richardson-extrapolated central differences of the `value`.
pub trait CurveSampler {
    fn value(&self, x: f64) -> f64;

    /// Value and first four derivatives at `x`.
    fn derivatives(&self, x: f64) -> [f64; 5] {
        let f = |t: f64| self.value(t);
        let scale = x.abs().max(1e-3);
        [
            self.value(x),
            fd::d1(&f, x, scale),
            fd::d2(&f, x, scale),
            fd::d3(&f, x, scale),
            fd::d4(&f, x, scale),
        ]
    }
}

impl CurveSampler for ParabolaBranch {
    fn value(&self, x: f64) -> f64 {
        ParabolaBranch::value(self, x)
    }
    fn derivatives(&self, x: f64) -> [f64; 5] {
        ParabolaBranch::derivatives(self, x)
    }
}

/// A sampler wrapping a plain closure (finite-difference derivatives).
pub struct SampledCurve<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> CurveSampler for SampledCurve<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// A sampler with caller-supplied exact derivatives.
pub struct AnalyticCurve<F: Fn(f64) -> [f64; 5]>(pub F);

impl<F: Fn(f64) -> [f64; 5]> CurveSampler for AnalyticCurve<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)[0]
    }
    fn derivatives(&self, x: f64) -> [f64; 5] {
        (self.0)(x)
    }
}

/// Residual of the universal parabola differential equation
/// `5 (f''')^2 - 3 f'''' f''` at `x0`, normalized by `max(1, |f''|^3)` for
/// comparability across curves. Zero (to the accuracy of the supplied
/// derivatives) exactly when the curve is a parabola near `x0`.
pub fn parabola_ode_residual(curve: &dyn CurveSampler, x0: f64) -> f64 {
    let d = curve.derivatives(x0);
    let raw = 5.0 * d[3] * d[3] - 3.0 * d[4] * d[2];
    raw / d[2].abs().powi(3).max(1.0)
}

/// Report of the chord-width parabola criterion; see [`check_property_p`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyPReport {
    /// The chord-width ratios `(x_a - x_p) / sqrt(lambda)`, one per tested
    /// `lambda`; constant exactly for parabolas.
    pub omega_estimates: Vec<f64>,
    /// Relative spread `(max - min) / |mean|` of the estimates.
    pub spread: f64,
    /// Whether the spread is below the tolerance.
    pub is_parabola: bool,
}

/// The chord-width parabola criterion.
///
/// For a strictly convex (or concave) curve `f` on `I`, cut the curve with
/// the line parallel to the tangent at `x0`, offset by `lambda` on the
/// convex side, and measure the width `x_a - x_p` between the two
/// intersections. The ratio `(x_a - x_p) / sqrt(lambda)` is independent of
/// `lambda` exactly when `f` is a parabola. The verdict is positive when
/// the relative spread of the ratios over `lambdas` stays below `tol`
/// (default guidance: `1e-6`).
pub fn check_property_p(
    curve: &dyn CurveSampler,
    interval: (f64, f64),
    x0: f64,
    lambdas: &[f64],
    tol: f64,
) -> Result<PropertyPReport> {
    let (lo, hi) = interval;
    if !(lo < x0 && x0 < hi) {
        return Err(Error::InvalidParameters(format!("x0 = {x0} must be interior to [{lo}, {hi}]")));
    }
    let f = |x: f64| curve.value(x);
    let slope = fd::d1(&f, x0, x0.abs().max(1e-3));
    // Curvature must keep one sign on the interval.
    let mut sign = 0.0f64;
    for i in 0..=16 {
        let x = lo + (hi - lo) * i as f64 / 16.0;
        let c = fd::d2(&f, x, x.abs().max(1e-3));
        if c.abs() < 1e-10 {
            continue;
        }
        if sign == 0.0 {
            sign = c.signum();
        } else if c.signum() != sign {
            return Err(Error::NotMonotoneCurvature);
        }
    }
    if sign == 0.0 {
        return Err(Error::NotMonotoneCurvature);
    }
    let f0 = f(x0);
    let mut estimates = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        if !(lam > 0.0) {
            return Err(Error::InvalidParameters(format!("lambda = {lam} must be positive")));
        }
        // h < 0 at x0 and h > 0 beyond the chord intersections.
        let h = |x: f64| sign * (f(x) - f0 - slope * (x - x0)) - lam;
        let left = if h(lo) > 0.0 {
            roots::brent(h, lo, x0, 1e-13)
        } else {
            None
        };
        let right = if h(hi) > 0.0 {
            roots::brent(h, x0, hi, 1e-13)
        } else {
            None
        };
        match (left, right) {
            (Some(xp), Some(xa)) => estimates.push((xa - xp) / lam.sqrt()),
            _ => return Err(Error::NoChord { lambda: lam }),
        }
    }
    let (mut mn, mut mx, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in &estimates {
        mn = mn.min(v);
        mx = mx.max(v);
        sum += v;
    }
    let mean = sum / estimates.len() as f64;
    let spread = (mx - mn) / mean.abs().max(1e-300);
    Ok(PropertyPReport { omega_estimates: estimates, spread, is_parabola: spread < tol })
}
