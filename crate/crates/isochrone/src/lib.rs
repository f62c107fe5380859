//! Isochrone radial potentials: classification, dynamics, and laws.
//!
//! An *isochrone* potential is a radial potential in which the radial
//! period of every bounded orbit depends only on the orbital energy, never
//! on the angular momentum. In the Henon variables `x = 2 r^2`,
//! `Y(x) = x psi(r)` the isochrone potentials are exactly those whose curve
//! is a parabola, and the whole family reduces to four canonical types
//! (Kepler, harmonic, Henon, bounded) up to an affine change of gauge.
//!
//! The crate is organized around that picture:
//!
//! - [`potentials`] — the four families, the affine group `J_{eps,lam}`,
//!   and scalar field quantities (value, derivative, mass, density).
//! - [`henon_geometry`] — parabolas in the Henon plane: construction from a
//!   potential, the reduction/classification pipeline, rotations, tangent
//!   and axis extraction, and two parabola-detection criteria.
//! - [`orbit_engine`] — numerical dynamics in any radial potential:
//!   apsides, singular-endpoint quadrature for the radial period,
//!   precession and radial action, trajectory integration, and an
//!   isochrony test.
//! - [`closed_forms`] — the analytic side: period/precession tables,
//!   closed-form radial actions, the defining integrals, the generalized
//!   Kepler third law, and a Bertrand closed-orbit scanner.
//! - [`bolst_relativity`] — the linear transformation algebra mapping
//!   Keplerian orbits to isochrone orbits: bolsts, ibolsts, orbit mapping
//!   with the polar-angle formula, momentum mapping, potential-image
//!   tables, and the inverse (back-to-Kepler) construction.
//! - [`numerics`] — the generic numerical machinery the above rely on.
//!
//! Conventions: `G = 1`; energies and angular momenta are specific (per
//! unit mass); radial potentials are functions of `r >= 0` only.

pub mod bolst_relativity;
pub mod closed_forms;
pub mod error;
pub mod henon_geometry;
pub mod numerics;
pub mod orbit_engine;
pub mod potentials;

pub use error::{Error, Result};
pub use potentials::{AffineTransform, Family, PotentialSpec};
