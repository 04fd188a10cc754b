//! Spectral laboratory for the quantitative rigidity of almost-CMC spheres.
//!
//! Surfaces are maps `f: S² → R³` sampled on a Gauss–Legendre grid. The crate
//! provides the transforms and differential operators on the sphere, the
//! geometry of immersions, Möbius gauge fixing, the Cauchy–Riemann operator on
//! tangent fields, conformal reparametrization of star-shaped surfaces, and the
//! energy identities and scaling diagnostics assembled into a report.

pub mod conformal;
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod maps;
pub mod mobius;
pub mod rigidity;
pub mod spectral;
pub mod tangent;
pub mod vec3;

pub use error::{Error, Result};
