use serde::{Deserialize, Serialize};

use super::SphericalDomain;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSpecKind {
    Arc,
    Cap,
    #[serde(alias = "geodesic_polygon", alias = "geodesicpolygon")]
    Polygon,
}

/// Key/value description of a domain, as read from a domain spec file:
///
/// ```toml
/// kind = "cap"
/// alpha_radians = 1.5707963267948966
/// dim = 3
/// ```
///
/// Polygons list their vertices instead of an opening:
///
/// ```toml
/// kind = "polygon"
/// vertices = [[0.3, -0.3, 0.9], [0.3, 0.3, 0.9], [-0.3, 0.3, 0.9]]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainSpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_radians: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Scales each vertex to unit length, so files may list vertices by
/// direction only.
pub fn project_to_sphere(vertices: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-12 && n.is_finite() {
                Ok([v[0] / n, v[1] / n, v[2] / n])
            } else {
                Err(Error::InvalidDomain(format!("vertex {i} has no direction")))
            }
        })
        .collect()
}

impl DomainSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("domain spec serializes")
    }

    pub fn build<T: Real>(&self) -> Result<SphericalDomain<T>> {
        let alpha = || {
            self.alpha_radians
                .map(T::lit)
                .ok_or_else(|| Error::Parse("missing alpha_radians".into()))
        };
        match self.kind {
            DomainSpecKind::Arc => {
                if let Some(d) = self.dim {
                    if d != 2 {
                        return Err(Error::InvalidDomain(format!("arcs require dim = 2, got {d}")));
                    }
                }
                SphericalDomain::arc(alpha()?)
            }
            DomainSpecKind::Cap => SphericalDomain::cap(alpha()?, self.dim.unwrap_or(3)),
            DomainSpecKind::Polygon => {
                if let Some(d) = self.dim {
                    if d != 3 {
                        return Err(Error::InvalidDomain(format!(
                            "polygons require dim = 3, got {d}"
                        )));
                    }
                }
                let verts = self
                    .vertices
                    .as_ref()
                    .ok_or_else(|| Error::Parse("missing vertices".into()))?;
                SphericalDomain::polygon(
                    project_to_sphere(verts)?
                        .iter()
                        .map(|v| [T::lit(v[0]), T::lit(v[1]), T::lit(v[2])])
                        .collect(),
                )
            }
        }
    }

    pub fn from_domain<T: Real>(domain: &SphericalDomain<T>) -> Self {
        match domain {
            SphericalDomain::Arc { alpha } => Self {
                kind: DomainSpecKind::Arc,
                alpha_radians: Some(alpha.to_f64_lossy()),
                vertices: None,
                dim: Some(2),
            },
            SphericalDomain::Cap { alpha, dim } => Self {
                kind: DomainSpecKind::Cap,
                alpha_radians: Some(alpha.to_f64_lossy()),
                vertices: None,
                dim: Some(*dim),
            },
            SphericalDomain::Polygon(poly) => Self {
                kind: DomainSpecKind::Polygon,
                alpha_radians: None,
                vertices: Some(
                    poly.vertices()
                        .iter()
                        .map(|v| [v[0].to_f64_lossy(), v[1].to_f64_lossy(), v[2].to_f64_lossy()])
                        .collect(),
                ),
                dim: Some(3),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainKind;

    #[test]
    fn parses_cap_and_polygon() {
        let cap = DomainSpec::parse("kind = \"cap\"\nalpha_radians = 1.0\ndim = 4\n").unwrap();
        let d: SphericalDomain<f64> = cap.build().unwrap();
        assert_eq!(d.kind(), DomainKind::Cap);
        assert_eq!(d.dim(), 4);

        let text = "kind = \"polygon\"\nvertices = [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.0, 0.6, 0.8]]\n";
        let poly: SphericalDomain<f64> = DomainSpec::parse(text).unwrap().build().unwrap();
        assert_eq!(poly.kind(), DomainKind::GeodesicPolygon);
    }

    #[test]
    fn rejects_missing_fields_and_unknown_keys() {
        assert!(DomainSpec::parse("kind = \"arc\"\n").unwrap().build::<f64>().is_err());
        assert!(DomainSpec::parse("kind = \"arc\"\nradius = 2.0\n").is_err());
        assert!(DomainSpec::parse("kind = \"arc\"\nalpha_radians = 1.0\ndim = 3\n")
            .unwrap()
            .build::<f64>()
            .is_err());
    }

    #[test]
    fn vertices_are_projected_to_the_sphere() {
        let v = project_to_sphere(&[[0.0, 0.0, 2.0], [3.0, 0.0, 4.0]]).unwrap();
        assert_eq!(v, vec![[0.0, 0.0, 1.0], [0.6, 0.0, 0.8]]);
        assert!(project_to_sphere(&[[0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let d = SphericalDomain::cap(0.75f64, 3).unwrap();
        let spec = DomainSpec::from_domain(&d);
        let back: SphericalDomain<f64> = DomainSpec::parse(&spec.to_text()).unwrap().build().unwrap();
        assert_eq!(back, d);
    }
}
