//! Spherical domains, their boundary distance, and the shrink/expand
//! families used to approximate a domain from inside and from outside.

mod file;
mod polygon;

pub use file::{project_to_sphere, DomainSpec, DomainSpecKind};
pub use polygon::GeodesicPolygon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Analytic parameters of the spherical p-harmonic eigenvalue problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PParams<T> {
    p: T,
    dim: usize,
    beta0: T,
}

impl<T: Real> PParams<T> {
    pub fn new(p: T, dim: usize) -> Result<Self> {
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("p must exceed 1, got {p}")));
        }
        if dim < 2 {
            return Err(Error::InvalidParams(format!("dimension must be >= 2, got {dim}")));
        }
        let n = T::from_usize_lossy(dim);
        let beta0 = (n - p) / (p - T::one());
        Ok(Self { p, dim, beta0 })
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// Ambient dimension N; the domain lives on S^{N-1}.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The radial exponent (N - p)/(p - 1).
    pub fn beta0(&self) -> T {
        self.beta0
    }

    /// Right-hand side factor `(p-1) beta (beta - beta0)`.
    pub fn eigen_factor(&self, beta: T) -> T {
        (self.p - T::one()) * beta * (beta - self.beta0)
    }

    /// Exponent `(p-2)/2` of the weight `beta^2 w^2 + |grad w|^2`.
    pub fn weight_exponent(&self) -> T {
        (self.p - lit(2.0)) / lit(2.0)
    }

    /// Inverts `eigen_factor(beta) = mu` on the requested branch.
    pub fn beta_for_eigenvalue(&self, mu: T, branch: Branch) -> Option<T> {
        let b0 = self.beta0;
        let disc = b0 * b0 + lit::<T>(4.0) * mu / (self.p - T::one());
        if disc < T::zero() {
            return None;
        }
        let s = disc.sqrt();
        let beta = match branch {
            Branch::Singular => (b0 + s) / lit(2.0),
            Branch::Regular => (b0 - s) / lit(2.0),
        };
        if branch.admits(beta) {
            Some(beta)
        } else {
            None
        }
    }

    pub fn cast<U: Real>(&self) -> PParams<U> {
        PParams::new(U::lit(self.p.to_f64_lossy()), self.dim).expect("valid parameters cast")
    }
}

/// Sign branch of the separable exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// beta > 0: the separable solution blows up at the vertex.
    Singular,
    /// beta < 0: the separable solution vanishes at the vertex.
    Regular,
}

impl Branch {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Branch::Singular => T::one(),
            Branch::Regular => -T::one(),
        }
    }

    pub fn admits<T: Real>(self, beta: T) -> bool {
        match self {
            Branch::Singular => beta > T::zero(),
            Branch::Regular => beta < T::zero(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Singular => "singular",
            Branch::Regular => "regular",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "singular" | "s" => Ok(Branch::Singular),
            "regular" | "r" => Ok(Branch::Regular),
            other => Err(Error::Parse(format!("unknown branch '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Arc,
    Cap,
    GeodesicPolygon,
}

/// A domain S of the unit sphere S^{N-1}.
///
/// * `Arc` lives on S^1 (N = 2): the points at angle `phi` with
///   `|phi| < alpha/2`, symmetric about `(1, 0)`.
/// * `Cap` lives on S^{N-1}, N >= 3: the points of colatitude `< alpha`
///   measured from the last coordinate axis.
/// * `Polygon` lives on S^2 (N = 3).
///
/// Every supported domain keeps a complement with nonempty interior.
#[derive(Clone, Debug, PartialEq)]
pub enum SphericalDomain<T> {
    Arc { alpha: T },
    Cap { alpha: T, dim: usize },
    Polygon(GeodesicPolygon<T>),
}

impl<T: Real> SphericalDomain<T> {
    pub fn arc(alpha: T) -> Result<Self> {
        let two_pi = T::PI() + T::PI();
        if !(alpha > T::zero() && alpha < two_pi) {
            return Err(Error::InvalidDomain(format!(
                "arc length must lie in (0, 2pi), got {alpha}"
            )));
        }
        Ok(SphericalDomain::Arc { alpha })
    }

    pub fn cap(alpha: T, dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidDomain(format!("caps need dim >= 3, got {dim}")));
        }
        if !(alpha > T::zero() && alpha < T::PI()) {
            return Err(Error::InvalidDomain(format!(
                "cap opening must lie in (0, pi), got {alpha}"
            )));
        }
        Ok(SphericalDomain::Cap { alpha, dim })
    }

    pub fn polygon(vertices: Vec<[T; 3]>) -> Result<Self> {
        Ok(SphericalDomain::Polygon(GeodesicPolygon::new(vertices)?))
    }

    pub fn kind(&self) -> DomainKind {
        match self {
            SphericalDomain::Arc { .. } => DomainKind::Arc,
            SphericalDomain::Cap { .. } => DomainKind::Cap,
            SphericalDomain::Polygon(_) => DomainKind::GeodesicPolygon,
        }
    }

    /// Ambient dimension N.
    pub fn dim(&self) -> usize {
        match self {
            SphericalDomain::Arc { .. } => 2,
            SphericalDomain::Cap { dim, .. } => *dim,
            SphericalDomain::Polygon(_) => 3,
        }
    }

    /// Arc length (arcs) or colatitude opening (caps).
    pub fn alpha(&self) -> Option<T> {
        match self {
            SphericalDomain::Arc { alpha } | SphericalDomain::Cap { alpha, .. } => Some(*alpha),
            SphericalDomain::Polygon(_) => None,
        }
    }

    pub fn is_axisymmetric(&self) -> bool {
        !matches!(self, SphericalDomain::Polygon(_))
    }

    /// Largest boundary distance attained in the domain.
    pub fn inradius(&self) -> T {
        match self {
            SphericalDomain::Arc { alpha } => *alpha / lit(2.0),
            SphericalDomain::Cap { alpha, .. } => *alpha,
            SphericalDomain::Polygon(poly) => poly.inradius(),
        }
    }

    /// A point of maximal boundary distance, as a unit vector in R^N.
    pub fn incenter(&self) -> Vec<T> {
        match self {
            SphericalDomain::Arc { .. } => vec![T::one(), T::zero()],
            SphericalDomain::Cap { dim, .. } => {
                let mut v = vec![T::zero(); *dim];
                v[dim - 1] = T::one();
                v
            }
            SphericalDomain::Polygon(poly) => poly.incenter().to_vec(),
        }
    }

    /// Shrinks the domain so every remaining point is farther than `delta`
    /// from the old boundary.
    pub fn shrink(&self, delta: T) -> Result<Self> {
        if delta < T::zero() {
            return Err(Error::InvalidParams(format!("shrink margin must be >= 0, got {delta}")));
        }
        if delta == T::zero() {
            return Ok(self.clone());
        }
        let inradius = self.inradius();
        if delta >= inradius {
            return Err(Error::EmptyDomain {
                delta: delta.to_f64_lossy(),
                inradius: inradius.to_f64_lossy(),
            });
        }
        match self {
            SphericalDomain::Arc { alpha } => Ok(SphericalDomain::Arc {
                alpha: *alpha - delta - delta,
            }),
            SphericalDomain::Cap { alpha, dim } => Ok(SphericalDomain::Cap {
                alpha: *alpha - delta,
                dim: *dim,
            }),
            SphericalDomain::Polygon(poly) => Ok(SphericalDomain::Polygon(poly.offset(-delta)?)),
        }
    }

    /// Expands the domain by pushing its boundary outward by `delta`.
    pub fn expand(&self, delta: T) -> Result<Self> {
        if delta < T::zero() {
            return Err(Error::InvalidParams(format!("expand margin must be >= 0, got {delta}")));
        }
        if delta == T::zero() {
            return Ok(self.clone());
        }
        match self {
            SphericalDomain::Arc { alpha } => {
                let opening = *alpha + delta + delta;
                if opening >= T::PI() + T::PI() {
                    return Err(Error::ComplementPolar {
                        opening: opening.to_f64_lossy(),
                    });
                }
                Ok(SphericalDomain::Arc { alpha: opening })
            }
            SphericalDomain::Cap { alpha, dim } => {
                let opening = *alpha + delta;
                if opening >= T::PI() {
                    return Err(Error::ComplementPolar {
                        opening: opening.to_f64_lossy(),
                    });
                }
                Ok(SphericalDomain::Cap {
                    alpha: opening,
                    dim: *dim,
                })
            }
            SphericalDomain::Polygon(poly) => Ok(SphericalDomain::Polygon(poly.offset(delta)?)),
        }
    }

    /// Geodesic distance from `sigma` (a unit vector in R^N) to the boundary.
    pub fn boundary_distance(&self, sigma: &[T]) -> Result<T> {
        let slack = lit::<T>(1e-12);
        let signed = self.signed_distance(sigma)?;
        if signed < -slack {
            return Err(Error::OutsideDomain {
                excess: (-signed).to_f64_lossy(),
            });
        }
        Ok(signed.max(T::zero()))
    }

    /// Boundary distance, negative outside the closed domain.
    pub fn signed_distance(&self, sigma: &[T]) -> Result<T> {
        match self {
            SphericalDomain::Arc { alpha } => {
                if sigma.len() < 2 {
                    return Err(Error::InvalidParams("arc points need 2 coordinates".into()));
                }
                let phi = sigma[1].atan2(sigma[0]);
                Ok(*alpha / lit(2.0) - phi.abs())
            }
            SphericalDomain::Cap { alpha, dim } => {
                if sigma.len() != *dim {
                    return Err(Error::InvalidParams(format!(
                        "cap points need {dim} coordinates, got {}",
                        sigma.len()
                    )));
                }
                Ok(*alpha - colatitude(sigma))
            }
            SphericalDomain::Polygon(poly) => {
                if sigma.len() != 3 {
                    return Err(Error::InvalidParams("polygon points need 3 coordinates".into()));
                }
                Ok(poly.signed_distance(&[sigma[0], sigma[1], sigma[2]]))
            }
        }
    }

    pub fn contains(&self, sigma: &[T]) -> bool {
        self.signed_distance(sigma).map(|d| d > T::zero()).unwrap_or(false)
    }

    pub fn cast<U: Real>(&self) -> SphericalDomain<U> {
        match self {
            SphericalDomain::Arc { alpha } => SphericalDomain::Arc {
                alpha: U::lit(alpha.to_f64_lossy()),
            },
            SphericalDomain::Cap { alpha, dim } => SphericalDomain::Cap {
                alpha: U::lit(alpha.to_f64_lossy()),
                dim: *dim,
            },
            SphericalDomain::Polygon(poly) => SphericalDomain::Polygon(poly.cast()),
        }
    }
}

/// Colatitude of a unit vector measured from the last coordinate axis.
pub fn colatitude<T: Real>(sigma: &[T]) -> T {
    let n = sigma.len();
    let perp = sigma[..n - 1].iter().map(|&x| x * x).sum::<T>().sqrt();
    perp.atan2(sigma[n - 1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyDirection {
    Inner,
    Outer,
}

/// Inner (shrunk) or outer (expanded) approximating family of a domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainFamily<T> {
    base: SphericalDomain<T>,
    direction: FamilyDirection,
    steps: Vec<T>,
}

impl<T: Real> DomainFamily<T> {
    pub fn new(base: SphericalDomain<T>, direction: FamilyDirection, steps: Vec<T>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidParams("domain family needs at least one step".into()));
        }
        if steps.iter().any(|&d| !(d > T::zero())) {
            return Err(Error::InvalidParams("family margins must be positive".into()));
        }
        if steps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParams("family margins must strictly decrease".into()));
        }
        Ok(Self {
            base,
            direction,
            steps,
        })
    }

    /// Dyadic margins `delta0 * 2^-k`, `k = 0..count`.
    pub fn dyadic_steps(delta0: T, count: usize) -> Vec<T> {
        (0..count)
            .map(|k| delta0 / T::powi(lit(2.0), k as i32))
            .collect()
    }

    pub fn base(&self) -> &SphericalDomain<T> {
        &self.base
    }

    pub fn direction(&self) -> FamilyDirection {
        self.direction
    }

    pub fn steps(&self) -> &[T] {
        &self.steps
    }

    pub fn member(&self, k: usize) -> Result<SphericalDomain<T>> {
        let delta = self.steps[k];
        match self.direction {
            FamilyDirection::Inner => self.base.shrink(delta),
            FamilyDirection::Outer => self.base.expand(delta),
        }
    }

    pub fn members(&self) -> Result<Vec<SphericalDomain<T>>> {
        (0..self.steps.len()).map(|k| self.member(k)).collect()
    }
}
