//! Numerical building blocks shared by the physics modules.
//!
//! Everything here is generic mathematics with no knowledge of potentials
//! or orbits: quadrature rules, root finding, finite differences, adaptive
//! Runge–Kutta integration, rational detection, and a deterministic
//! parallel map.

pub mod cf;
pub mod fd;
pub mod gauss;
pub mod par;
pub mod rk;
pub mod roots;
