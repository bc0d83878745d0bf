use crate::error::{Error, Result};
use crate::scalar::{
    add3, angle3, cross3, dot3, lit, norm3, normalize3, scale3, sub3, Real, Vec3,
};

/// Simple geodesic polygon on S^2 contained in an open hemisphere.
///
/// Vertices are stored counterclockwise as seen from outside the sphere, so
/// `normalize(v_i x v_{i+1})` is the inward unit normal of edge `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPolygon<T> {
    vertices: Vec<Vec3<T>>,
    normals: Vec<Vec3<T>>,
    center: Vec3<T>,
    basis: [Vec3<T>; 2],
    incenter: Vec3<T>,
    inradius: T,
}

impl<T: Real> GeodesicPolygon<T> {
    pub fn new(vertices: Vec<Vec3<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        let unit_tol = lit::<T>(1e-9);
        for (i, v) in vertices.iter().enumerate() {
            if !v.iter().all(|x| x.is_finite()) || (norm3(v) - T::one()).abs() > unit_tol {
                return Err(Error::InvalidDomain(format!("vertex {i} is not a unit vector")));
            }
        }
        let mut vertices: Vec<Vec3<T>> = vertices.iter().map(normalize3).collect();
        let n = vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dot3(&vertices[i], &vertices[j]);
                if d < lit::<T>(-1.0 + 1e-9) {
                    return Err(Error::InvalidDomain(format!(
                        "vertices {i} and {j} are antipodal"
                    )));
                }
                if angle3(&vertices[i], &vertices[j]) < lit(1e-9) {
                    return Err(Error::InvalidDomain(format!("vertices {i} and {j} coincide")));
                }
            }
        }
        let sum = vertices.iter().fold([T::zero(); 3], |acc, v| add3(&acc, v));
        if norm3(&sum) < lit(1e-9) {
            return Err(Error::InvalidDomain("polygon not contained in a hemisphere".into()));
        }
        let center = normalize3(&sum);
        if vertices.iter().any(|v| dot3(v, &center) <= lit(1e-3)) {
            return Err(Error::InvalidDomain("polygon not contained in an open hemisphere".into()));
        }
        let basis = tangent_basis(&center);
        let planar: Vec<[T; 2]> = vertices.iter().map(|v| gnomonic(&center, &basis, v)).collect();
        if signed_area(&planar) < T::zero() {
            vertices.reverse();
        }
        let planar: Vec<[T; 2]> = vertices.iter().map(|v| gnomonic(&center, &basis, v)).collect();
        if !is_simple(&planar) {
            return Err(Error::InvalidDomain("polygon edges self-intersect".into()));
        }
        let normals = (0..n)
            .map(|i| normalize3(&cross3(&vertices[i], &vertices[(i + 1) % n])))
            .collect();
        let mut poly = Self {
            vertices,
            normals,
            center,
            basis,
            incenter: center,
            inradius: T::zero(),
        };
        let (incenter, inradius) = poly.locate_incenter();
        if !(inradius > T::zero()) {
            return Err(Error::InvalidDomain("polygon has empty interior".into()));
        }
        poly.incenter = incenter;
        poly.inradius = inradius;
        Ok(poly)
    }

    /// Regular polygon with `n` vertices at colatitude `circumradius` about
    /// the north pole.
    pub fn regular(n: usize, circumradius: T) -> Result<Self> {
        let verts = (0..n)
            .map(|k| {
                let phi = (T::PI() + T::PI()) * T::from_usize_lossy(k) / T::from_usize_lossy(n);
                let (s, c) = circumradius.sin_cos();
                [s * phi.cos(), s * phi.sin(), c]
            })
            .collect();
        Self::new(verts)
    }

    /// Geodesic square of the given side length centred on the north pole.
    pub fn square(side: T) -> Result<Self> {
        // Adjacent vertices (a, a, 1) and (-a, a, 1) subtend cos(side) = 1/(2a^2 + 1).
        let a = ((T::one() / side.cos() - T::one()) / lit(2.0)).sqrt();
        let raw = [[a, -a], [a, a], [-a, a], [-a, -a]];
        Self::new(
            raw.iter()
                .map(|[x, y]| normalize3(&[*x, *y, T::one()]))
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    /// Inward unit normals of the edge great circles.
    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn center(&self) -> Vec3<T> {
        self.center
    }

    pub fn incenter(&self) -> Vec3<T> {
        self.incenter
    }

    pub fn inradius(&self) -> T {
        self.inradius
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Vec3<T>, Vec3<T>) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    /// Gnomonic chart about the vertex centroid; maps geodesics to lines.
    pub fn chart(&self, x: &Vec3<T>) -> [T; 2] {
        gnomonic(&self.center, &self.basis, x)
    }

    /// Inverse of [`Self::chart`].
    pub fn unchart(&self, q: [T; 2]) -> Vec3<T> {
        let p = add3(
            &self.center,
            &add3(&scale3(q[0], &self.basis[0]), &scale3(q[1], &self.basis[1])),
        );
        normalize3(&p)
    }

    pub fn contains_point(&self, x: &Vec3<T>) -> bool {
        if dot3(x, &self.center) <= T::zero() {
            return false;
        }
        let q = self.chart(x);
        let planar: Vec<[T; 2]> = self.vertices.iter().map(|v| self.chart(v)).collect();
        point_in_polygon(&planar, q)
    }

    /// Geodesic distance to the nearest edge arc.
    pub fn distance_to_boundary(&self, x: &Vec3<T>) -> T {
        (0..self.vertices.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                segment_distance(x, &a, &b, &self.normals[i])
            })
            .fold(T::infinity(), T::min)
    }

    pub fn signed_distance(&self, x: &Vec3<T>) -> T {
        let d = self.distance_to_boundary(x);
        if self.contains_point(x) {
            d
        } else {
            -d
        }
    }

    /// Moves every edge along its normal by `distance` (outward when
    /// positive), placing the new vertices on the interior angle bisectors.
    pub(crate) fn offset(&self, distance: T) -> Result<Self> {
        let n = self.vertices.len();
        let target = -distance.sin();
        let mut moved = Vec::with_capacity(n);
        let fail = |msg: &str| -> Error {
            if distance < T::zero() {
                Error::EmptyDomain {
                    delta: (-distance).to_f64_lossy(),
                    inradius: self.inradius.to_f64_lossy(),
                }
            } else {
                Error::InvalidDomain(format!("outward offset rejected: {msg}"))
            }
        };
        for i in 0..n {
            let na = self.normals[(i + n - 1) % n];
            let nb = self.normals[i];
            let v = self.vertices[i];
            let cosab = dot3(&na, &nb);
            let c = target / (T::one() + cosab);
            let w = normalize3(&cross3(&na, &nb));
            let w = if dot3(&w, &v) < T::zero() {
                scale3(-T::one(), &w)
            } else {
                w
            };
            let g2 = T::one() - c * c * lit(2.0) * (T::one() + cosab);
            if !(g2 > T::zero()) {
                return Err(fail("bisector offset leaves the sphere"));
            }
            let x = add3(&scale3(c, &add3(&na, &nb)), &scale3(g2.sqrt(), &w));
            moved.push(normalize3(&x));
        }
        for i in 0..n {
            let e = cross3(&moved[i], &moved[(i + 1) % n]);
            if !(dot3(&e, &self.normals[i]) > T::zero()) {
                return Err(fail("edge orientation flipped"));
            }
        }
        let sum = moved.iter().fold([T::zero(); 3], |acc, v| add3(&acc, v));
        let center = normalize3(&sum);
        if moved.iter().any(|v| dot3(v, &center) <= lit(1e-3)) {
            if distance > T::zero() {
                return Err(Error::ComplementPolar {
                    opening: distance.to_f64_lossy(),
                });
            }
            return Err(fail("offset polygon leaves the hemisphere"));
        }
        Self::new(moved).map_err(|e| match e {
            Error::InvalidDomain(msg) => fail(&msg),
            other => other,
        })
    }

    fn locate_incenter(&self) -> (Vec3<T>, T) {
        let planar: Vec<[T; 2]> = self.vertices.iter().map(|v| self.chart(v)).collect();
        let (mut lo, mut hi) = ([T::infinity(); 2], [T::neg_infinity(); 2]);
        for q in &planar {
            for k in 0..2 {
                lo[k] = lo[k].min(q[k]);
                hi[k] = hi[k].max(q[k]);
            }
        }
        let samples = 48usize;
        let mut best = (self.center, T::neg_infinity());
        let mut best_q = [T::zero(); 2];
        for i in 0..=samples {
            for j in 0..=samples {
                let s = T::from_usize_lossy(i) / T::from_usize_lossy(samples);
                let t = T::from_usize_lossy(j) / T::from_usize_lossy(samples);
                let q = [lo[0] + s * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])];
                if !point_in_polygon(&planar, q) {
                    continue;
                }
                let x = self.unchart(q);
                let d = self.distance_to_boundary(&x);
                if d > best.1 {
                    best = (x, d);
                    best_q = q;
                }
            }
        }
        if !(best.1 > T::neg_infinity()) {
            return (self.center, T::zero());
        }
        // compass search refinement in the chart
        let mut step = (hi[0] - lo[0]).max(hi[1] - lo[1]) / T::from_usize_lossy(samples);
        let floor = lit::<T>(1e-12);
        while step > floor {
            let mut improved = false;
            for dir in [[T::one(), T::zero()], [-T::one(), T::zero()], [T::zero(), T::one()], [T::zero(), -T::one()]] {
                let q = [best_q[0] + step * dir[0], best_q[1] + step * dir[1]];
                if !point_in_polygon(&planar, q) {
                    continue;
                }
                let x = self.unchart(q);
                let d = self.distance_to_boundary(&x);
                if d > best.1 {
                    best = (x, d);
                    best_q = q;
                    improved = true;
                }
            }
            if !improved {
                step = step / lit(2.0);
            }
        }
        best
    }

    pub fn cast<U: Real>(&self) -> GeodesicPolygon<U> {
        let verts = self
            .vertices
            .iter()
            .map(|v| [U::lit(v[0].to_f64_lossy()), U::lit(v[1].to_f64_lossy()), U::lit(v[2].to_f64_lossy())])
            .collect();
        GeodesicPolygon::new(verts).expect("valid polygon cast")
    }
}

/// Distance from `x` to the minor great-circle arc from `a` to `b`.
pub(crate) fn segment_distance<T: Real>(x: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>, n: &Vec3<T>) -> T {
    let h = dot3(x, n);
    let p = sub3(x, &scale3(h, n));
    let pn = norm3(&p);
    if pn > T::min_positive_value() {
        let within = dot3(&cross3(a, &p), n) >= T::zero() && dot3(&cross3(&p, b), n) >= T::zero();
        if within {
            return h.abs().atan2(pn);
        }
    }
    angle3(x, a).min(angle3(x, b))
}

fn tangent_basis<T: Real>(c: &Vec3<T>) -> [Vec3<T>; 2] {
    let trial = if c[0].abs() < lit(0.9) {
        [T::one(), T::zero(), T::zero()]
    } else {
        [T::zero(), T::one(), T::zero()]
    };
    let e1 = normalize3(&sub3(&trial, &scale3(dot3(&trial, c), c)));
    let e2 = cross3(c, &e1);
    [e1, e2]
}

fn gnomonic<T: Real>(c: &Vec3<T>, basis: &[Vec3<T>; 2], x: &Vec3<T>) -> [T; 2] {
    let z = dot3(x, c);
    [dot3(x, &basis[0]) / z, dot3(x, &basis[1]) / z]
}

fn signed_area<T: Real>(pts: &[[T; 2]]) -> T {
    let n = pts.len();
    let mut s = T::zero();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        s = s + a[0] * b[1] - a[1] * b[0];
    }
    s / lit(2.0)
}

fn orient<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross<T: Real>(p1: [T; 2], p2: [T; 2], q1: [T; 2], q2: [T; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > T::zero()) != (d2 > T::zero())) && ((d3 > T::zero()) != (d4 > T::zero()))
}

fn is_simple<T: Real>(pts: &[[T; 2]]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    signed_area(pts) != T::zero()
}

pub(crate) fn point_in_polygon<T: Real>(pts: &[[T; 2]], q: [T; 2]) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a[1] > q[1]) != (b[1] > q[1]) {
            let x = a[0] + (q[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if q[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> GeodesicPolygon<f64> {
        GeodesicPolygon::square(PI / 4.0).unwrap()
    }

    #[test]
    fn square_has_requested_side() {
        let sq = square();
        for i in 0..4 {
            let (a, b) = sq.edge(i);
            assert!((angle3(&a, &b) - PI / 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn reversed_input_is_reoriented() {
        let mut v = square().vertices().to_vec();
        v.reverse();
        let p = GeodesicPolygon::new(v).unwrap();
        assert!(dot3(&p.normals()[0], &[0.0, 0.0, 1.0]) > 0.0);
    }

    #[test]
    fn rejects_bowtie_and_antipodes() {
        let bow = vec![
            normalize3(&[0.3, 0.3, 1.0]),
            normalize3(&[-0.3, -0.3, 1.0]),
            normalize3(&[0.3, -0.3, 1.0]),
            normalize3(&[-0.3, 0.3, 1.0]),
        ];
        assert!(GeodesicPolygon::new(bow).is_err());
        let anti = vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(GeodesicPolygon::new(anti).is_err());
    }

    #[test]
    fn centroid_distance_matches_boundary_sampling() {
        let sq = square();
        let c = [0.0, 0.0, 1.0];
        let d = sq.distance_to_boundary(&c);
        // brute force: 10^4 boundary samples along the edge geodesics
        let mut brute = f64::INFINITY;
        let per_edge = 2500;
        for i in 0..4 {
            let (a, b) = sq.edge(i);
            let omega = angle3(&a, &b);
            for k in 0..=per_edge {
                let t = k as f64 / per_edge as f64;
                let s0 = ((1.0 - t) * omega).sin() / omega.sin();
                let s1 = (t * omega).sin() / omega.sin();
                let x = add3(&scale3(s0, &a), &scale3(s1, &b));
                brute = brute.min(angle3(&c, &x));
            }
        }
        assert!((d - brute).abs() < 1e-8, "{d} vs {brute}");
        assert!((sq.inradius() - d).abs() < 1e-9);
    }

    #[test]
    fn outward_offset_distance_is_bounded() {
        let sq = square();
        let delta = 0.05;
        let grown = sq.offset(delta).unwrap();
        let per_edge = 400;
        for i in 0..4 {
            let (a, b) = grown.edge(i);
            let n_old = sq.normals()[i];
            let omega = angle3(&a, &b);
            let half = omega / 2.0;
            // new edge points sit between delta (at vertices) and the chord midpoint bound
            let upper = (delta.sin() / half.cos()).asin();
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for k in 0..=per_edge {
                let t = k as f64 / per_edge as f64;
                let s0 = ((1.0 - t) * omega).sin() / omega.sin();
                let s1 = (t * omega).sin() / omega.sin();
                let x = add3(&scale3(s0, &a), &scale3(s1, &b));
                let d = dot3(&x, &n_old).abs().asin();
                assert!(dot3(&x, &n_old) < 0.0, "new edge must lie outside the old one");
                lo = lo.min(d);
                hi = hi.max(d);
            }
            assert!((lo - delta).abs() < 1e-12, "edge {i}: min offset {lo}");
            assert!(hi <= upper + 1e-12 && hi >= delta, "edge {i}: max offset {hi} > {upper}");
        }
        assert!(grown.contains_point(&sq.vertices()[0]));
    }

    #[test]
    fn inward_offset_keeps_points_away_from_boundary() {
        let sq = square();
        let delta = 0.1;
        let shrunk = sq.offset(-delta).unwrap();
        for v in shrunk.vertices() {
            assert!(sq.distance_to_boundary(v) >= delta - 1e-12);
        }
        assert!(sq.offset(-sq.inradius() * 1.01).is_err());
    }
}
