//! Library-wide error type.
//!
//! Every fallible operation in the crate reports through [`Error`]. The
//! variants mirror the failure modes of the individual modules: domain
//! violations of a potential, degenerate conics, orbit-solving failures,
//! closed-form precondition violations, and transformation-algebra errors.

use thiserror::Error;

/// Unified error type for all isochrone operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // ---- potentials -----------------------------------------------------
    /// Radius outside the domain of the potential (e.g. `r > b` for the
    /// bounded family, or `r = 0` with a singular term).
    #[error("radius r = {r} outside the domain of the potential: {reason}")]
    DomainError { r: f64, reason: String },

    /// Parameters do not describe a valid member of the requested family.
    #[error("invalid potential parameters: {0}")]
    InvalidParameters(String),

    // ---- henon-geometry -------------------------------------------------
    /// The conic coefficients do not describe a non-degenerate parabola.
    #[error("degenerate parabola: {0}")]
    DegenerateParabola(String),

    /// The vertical-translation quadratic has no real root; the input is
    /// not reducible to an origin-passing parabola.
    #[error("no real root for the vertical translation; input is not a reducible parabola")]
    AmbiguousRoot,

    /// The parabola does not pass through the origin.
    #[error("parabola does not pass through the origin (|e| = {e_abs})")]
    NotThroughOrigin { e_abs: f64 },

    /// The chord equation has no bracketed roots for the given offset.
    #[error("no chord intersections for offset {lambda}")]
    NoChord { lambda: f64 },

    /// The sampled curve changes curvature sign on the interval.
    #[error("curvature changes sign on the sampled interval")]
    NotMonotoneCurvature,

    // ---- orbit-engine ---------------------------------------------------
    /// The effective potential has no interior minimum (no circular orbit).
    #[error("effective potential has no interior minimum for L = {l}")]
    NoMinimum { l: f64 },

    /// The energy is at or above the escape value; no bounded orbit exists.
    #[error("energy xi = {xi} at or above the escape energy {psi_inf}; orbit unbound")]
    Unbound { xi: f64, psi_inf: f64 },

    /// The energy is below the circular-orbit minimum for this momentum.
    #[error("energy xi = {xi} below the circular minimum xi_c = {xi_c}")]
    BelowCircular { xi: f64, xi_c: f64 },

    /// Quadrature failed to converge within the order budget.
    #[error("quadrature did not converge below the requested tolerance (max order {max_order})")]
    NonConvergent { max_order: usize },

    /// Angular momentum is zero where a periodic radial orbit is required.
    #[error("zero angular momentum: a radial orbit is not a periodic radial orbit")]
    ZeroMomentum,

    /// The adaptive integrator could not take a successful step.
    #[error("integrator step failure at t = {t}")]
    StepFailure { t: f64 },

    /// The trajectory left the potential domain (bounded family only).
    #[error("trajectory left the potential domain at t = {t}, r = {r}")]
    DomainExit { t: f64, r: f64 },

    /// Not enough apsis events to measure a precession.
    #[error("trajectory has too few apsis events ({found}, need {need})")]
    InsufficientEvents { found: usize, need: usize },

    // ---- closed-forms ---------------------------------------------------
    /// The shifted energy has the wrong sign for the family formula.
    #[error("shifted energy {xi_shifted} has the wrong sign for the {family} closed form")]
    EnergySign { xi_shifted: f64, family: String },

    /// The gauge leaves no real effective momentum (lambda + L^2 <= 0).
    #[error("gauge domain violated: lambda + L^2 = {value} <= 0")]
    GaugeDomain { value: f64 },

    /// The (xi, L) pair admits no periodic radial orbit (negative action).
    #[error("no periodic radial orbit: closed-form radial action is negative ({value})")]
    NoPRO { value: f64 },

    /// Integral arguments out of order (u1 > u2).
    #[error("integral arguments out of order: u1 = {u1} > u2 = {u2}")]
    OrderError { u1: f64, u2: f64 },

    /// The integral arguments straddle the excluded point u = 2.
    #[error("integral arguments straddle u = 2 (u1 = {u1}, u2 = {u2}); no closed-form branch")]
    BranchError { u1: f64, u2: f64 },

    // ---- bolst-relativity -----------------------------------------------
    /// The bolst has determinant alpha + beta = 0.
    #[error("singular bolst: alpha + beta = 0")]
    SingularBolst,

    /// The image energy is zero; associated orbits are not well-defined.
    /// Apply a transvection first to shift the energy away from zero.
    #[error("image energy xi1 = 0; apply a transvection first to shift the energy")]
    ZeroImageEnergy,

    /// The time reparametrization changes sign along the orbit.
    #[error("dt1/dt0 changes sign along the orbit; the image is not a single-time orbit")]
    CausalityViolation,

    /// Momentum mapping with gamma < 0 and equal energy signs.
    #[error("gamma = {gamma} < 0 with equal energy signs: mapped momentum is imaginary")]
    ImaginaryMomentum { gamma: f64 },

    /// Energy signs inconsistent with the requested source/sign pair.
    #[error("inconsistent sign inputs: {0}")]
    SignError(String),

    /// The parabola does not classify to an isochrone family.
    #[error("parabola is not an isochrone parabola: {0}")]
    NotIsochrone(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
