use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::space::P1Space;
use crate::error::{Error, Result};
use crate::geometry::{GeodesicPolygon, SphericalDomain};
use crate::scalar::{lit, norm3, normalize3, sphere_area, Real, Vec3};

/// Triangulation of a patch of `S^2` by flat triangles with vertices on the
/// sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

impl<T: Real> SurfaceMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>, boundary: Vec<bool>) -> Result<Self> {
        if boundary.len() != vertices.len() {
            return Err(Error::MeshError("boundary flag count differs from vertex count".into()));
        }
        let tol = lit::<T>(1e-12).max(T::epsilon() * lit(64.0));
        if let Some(i) = vertices.iter().position(|v| (norm3(v) - T::one()).abs() > tol) {
            return Err(Error::MeshError(format!("vertex {i} is not on the unit sphere")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::MeshError(format!("triangle {t} has invalid vertex indices")));
            }
        }
        Ok(Self {
            vertices,
            triangles,
            boundary,
        })
    }

    /// Ring mesh of the cap `{colatitude < alpha}` around the last axis:
    /// `rings` circles at colatitudes `j alpha / rings`, carrying `6 j`
    /// equally spaced vertices each.
    pub fn cap(alpha: T, rings: usize) -> Result<Self> {
        if rings == 0 || !(alpha > T::zero() && alpha < T::PI()) {
            return Err(Error::MeshError(format!("invalid cap mesh request (alpha {alpha}, rings {rings})")));
        }
        let mut vertices = vec![[T::zero(), T::zero(), T::one()]];
        let mut boundary = vec![false];
        let mut ring_start = vec![0usize];
        for j in 1..=rings {
            ring_start.push(vertices.len());
            let theta = alpha * T::from_usize_lossy(j) / T::from_usize_lossy(rings);
            let m = 6 * j;
            for k in 0..m {
                let phi = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(m);
                vertices.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
                boundary.push(j == rings);
            }
        }
        let mut triangles = Vec::with_capacity(6 * rings * rings);
        for k in 0..6 {
            triangles.push([0, 1 + k, 1 + (k + 1) % 6]);
        }
        for j in 1..rings {
            let (m, mo) = (6 * j, 6 * (j + 1));
            let (si, so) = (ring_start[j], ring_start[j + 1]);
            let (mut i, mut o) = (0usize, 0usize);
            while i < m || o < mo {
                // advance along whichever ring has the nearer next vertex
                let inner_next = (i + 1) * mo;
                let outer_next = (o + 1) * m;
                if o >= mo || (i < m && inner_next <= outer_next) {
                    triangles.push([si + i % m, si + (i + 1) % m, so + o % mo]);
                    i += 1;
                } else {
                    triangles.push([si + i % m, so + (o + 1) % mo, so + o % mo]);
                    o += 1;
                }
            }
        }
        Self::new(vertices, triangles, boundary)
    }

    /// Fan from the incenter to the polygon vertices, refined uniformly
    /// `levels` times with midpoints projected back to the sphere.
    pub fn polygon(poly: &GeodesicPolygon<T>, levels: usize) -> Result<Self> {
        let n = poly.len();
        let mut vertices = vec![poly.incenter()];
        vertices.extend_from_slice(poly.vertices());
        let mut boundary = vec![false];
        boundary.extend(std::iter::repeat(true).take(n));
        let mut triangles: Vec<[usize; 3]> = (0..n).map(|i| [0, 1 + i, 1 + (i + 1) % n]).collect();
        let mut bnd_edges: HashSet<(usize, usize)> =
            (0..n).map(|i| edge_key(1 + i, 1 + (i + 1) % n)).collect();
        for _ in 0..levels {
            let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
            let mut next_edges = HashSet::new();
            let mut refined = Vec::with_capacity(triangles.len() * 4);
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3<T>>, boundary: &mut Vec<bool>| -> usize {
                let key = edge_key(a, b);
                if let Some(&m) = mids.get(&key) {
                    return m;
                }
                let (va, vb) = (vertices[a], vertices[b]);
                let mid = normalize3(&[va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]]);
                vertices.push(mid);
                let on_boundary = bnd_edges.contains(&key);
                boundary.push(on_boundary);
                let m = vertices.len() - 1;
                if on_boundary {
                    next_edges.insert(edge_key(a, m));
                    next_edges.insert(edge_key(m, b));
                }
                mids.insert(key, m);
                m
            };
            for &[a, b, c] in &triangles {
                let ab = midpoint(a, b, &mut vertices, &mut boundary);
                let bc = midpoint(b, c, &mut vertices, &mut boundary);
                let ca = midpoint(c, a, &mut vertices, &mut boundary);
                refined.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            }
            triangles = refined;
            bnd_edges = next_edges;
        }
        Self::new(vertices, triangles, boundary)
    }

    /// Default surface mesh for a cap or polygon on `S^2`.
    pub fn for_domain(domain: &SphericalDomain<T>, resolution: usize) -> Result<Self> {
        match domain {
            SphericalDomain::Cap { alpha, dim: 3 } => Self::cap(*alpha, resolution),
            SphericalDomain::Polygon(poly) => Self::polygon(poly, resolution),
            _ => Err(Error::MeshError("surface meshes cover caps and polygons on S^2".into())),
        }
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn space(&self) -> Result<P1Space<T>> {
        P1Space::from_triangles(self.vertices.clone(), &self.triangles, self.boundary.clone(), |_| T::one())
    }

    /// Plain text exchange format:
    ///
    /// ```text
    /// vertices <n>
    /// x y z        (n lines)
    /// triangles <m>
    /// i j k        (m lines)
    /// boundary <n>
    /// 0|1          (n lines)
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(
                s,
                "{:e} {:e} {:e}",
                v[0].to_f64_lossy(),
                v[1].to_f64_lossy(),
                v[2].to_f64_lossy()
            );
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary {}", self.boundary.len());
        for &b in &self.boundary {
            let _ = writeln!(s, "{}", u8::from(b));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let all: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let mut pos = 0;
        let take = |pos: &mut usize| -> Result<&str> {
            let l = all.get(*pos).copied().ok_or_else(|| Error::Parse("unexpected end of mesh".into()))?;
            *pos += 1;
            Ok(l)
        };
        let nums = |l: &str| -> Result<Vec<f64>> {
            l.split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| Error::Parse(format!("'{x}': {e}"))))
                .collect()
        };
        let count = |l: &str, name: &str| -> Result<usize> {
            let mut it = l.split_whitespace();
            if it.next() != Some(name) {
                return Err(Error::Parse(format!("expected '{name}' header, got '{l}'")));
            }
            it.next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad count in '{l}'")))
        };
        let nv = count(take(&mut pos)?, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let v = nums(take(&mut pos)?)?;
            if v.len() != 3 {
                return Err(Error::Parse("vertex lines need 3 numbers".into()));
            }
            vertices.push([T::lit(v[0]), T::lit(v[1]), T::lit(v[2])]);
        }
        let nt = count(take(&mut pos)?, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let idx: Vec<usize> = take(&mut pos)?
                .split_whitespace()
                .map(|x| x.parse::<usize>().map_err(|e| Error::Parse(format!("'{x}': {e}"))))
                .collect::<Result<_>>()?;
            if idx.len() != 3 {
                return Err(Error::Parse("triangle lines need 3 indices".into()));
            }
            triangles.push([idx[0], idx[1], idx[2]]);
        }
        let nb = count(take(&mut pos)?, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            boundary.push(match take(&mut pos)? {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse(format!("boundary flag '{other}'"))),
            });
        }
        Self::new(vertices, triangles, boundary)
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Partition of `[0, alpha]`, either an arc of `S^1` (both ends Dirichlet)
/// or the meridian of an axisymmetric cap of `S^{N-1}` (Dirichlet at
/// `alpha`, natural at the pole, density `|S^{N-2}| sin^{N-2}`).
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMesh<T> {
    nodes: Vec<T>,
    dim: usize,
}

impl<T: Real> IntervalMesh<T> {
    pub fn from_nodes(nodes: Vec<T>, dim: usize) -> Result<Self> {
        if nodes.len() < 3 || nodes[0] != T::zero() || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::MeshError("interval nodes must start at 0 and increase".into()));
        }
        if dim < 2 {
            return Err(Error::MeshError(format!("dimension {dim} < 2")));
        }
        Ok(Self { nodes, dim })
    }

    pub fn uniform(alpha: T, intervals: usize, dim: usize) -> Result<Self> {
        Self::from_nodes(
            (0..=intervals)
                .map(|j| alpha * T::from_usize_lossy(j) / T::from_usize_lossy(intervals))
                .collect(),
            dim,
        )
    }

    pub fn for_domain(domain: &SphericalDomain<T>, intervals: usize) -> Result<Self> {
        match domain {
            SphericalDomain::Arc { alpha } => Self::uniform(*alpha, intervals, 2),
            SphericalDomain::Cap { alpha, dim } => Self::uniform(*alpha, intervals, *dim),
            SphericalDomain::Polygon(_) => Err(Error::MeshError("polygons need a surface mesh".into())),
        }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> Result<P1Space<T>> {
        let n = self.nodes.len();
        let mut flags = vec![false; n];
        flags[n - 1] = true;
        if self.dim == 2 {
            flags[0] = true;
            P1Space::from_intervals(&self.nodes, flags, |_| T::one())
        } else {
            let area = sphere_area::<T>(self.dim - 2);
            let k = self.dim as i32 - 2;
            P1Space::from_intervals(&self.nodes, flags, |t| area * t.sin().powi(k))
        }
    }
}
