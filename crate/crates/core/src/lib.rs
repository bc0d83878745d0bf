//! Separable p-harmonic exponents and spherical p-harmonic eigenfunctions.

pub mod cone;
pub mod eigen;
pub mod error;
pub mod exponent;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod ode;
pub mod scalar;
pub mod verify;

pub use eigen::{Eigenpair, Profile};
pub use error::{Error, Result};
pub use geometry::{Branch, DomainFamily, FamilyDirection, PParams, SphericalDomain};
pub use scalar::{lit, sphere_area, Real};

// Scalar instances of the main generic types.
pub type PParams64 = geometry::PParams<f64>;
pub type SphericalDomain64 = geometry::SphericalDomain<f64>;
pub type Eigenpair64 = eigen::Eigenpair<f64>;
pub type ColatGrid64 = ode::ColatGrid<f64>;
pub type P1Space64 = fem::P1Space<f64>;
pub type BracketResult64 = exponent::BracketResult<f64>;
pub type ConeDomain64 = cone::ConeDomain<f64>;
pub type ConeGrid64 = cone::ConeGrid<f64>;
pub type ConeField64 = cone::ConeField<f64>;
pub type TauFamily64 = cone::TauFamily<f64>;
pub type PParams32 = geometry::PParams<f32>;
pub type SphericalDomain32 = geometry::SphericalDomain<f32>;
pub type Eigenpair32 = eigen::Eigenpair<f32>;
pub type ColatGrid32 = ode::ColatGrid<f32>;
pub type P1Space32 = fem::P1Space<f32>;
pub type BracketResult32 = exponent::BracketResult<f32>;
pub type ConeDomain32 = cone::ConeDomain<f32>;
pub type ConeGrid32 = cone::ConeGrid<f32>;
pub type ConeField32 = cone::ConeField<f32>;
pub type TauFamily32 = cone::TauFamily<f32>;
