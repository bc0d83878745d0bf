use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{cross3, dot3, lit, norm3, scale3, sub3, Real, Vec3};

/// A linear element: an interval (`arity = 2`) or a triangle (`arity = 3`).
///
/// `measure` already includes any density of the underlying integral
/// (e.g. `sin^{N-2}` of a meridian reduction), and `grads` are the constant
/// gradients of the hat functions embedded in `R^3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element<T> {
    pub nodes: [usize; 3],
    pub arity: usize,
    pub measure: T,
    pub grads: [Vec3<T>; 3],
}

impl<T: Real> Element<T> {
    #[inline]
    pub fn local(&self) -> &[usize] {
        &self.nodes[..self.arity]
    }

    #[inline]
    pub fn mean(&self, values: &[T]) -> T {
        let s: T = self.local().iter().map(|&i| values[i]).sum();
        s / T::from_usize_lossy(self.arity)
    }

    #[inline]
    pub fn gradient(&self, values: &[T]) -> Vec3<T> {
        let mut g = [T::zero(); 3];
        for (a, &i) in self.local().iter().enumerate() {
            for k in 0..3 {
                g[k] = g[k] + values[i] * self.grads[a][k];
            }
        }
        g
    }

    /// Entry `(a, b)` of the exact P1 mass matrix divided by the measure.
    #[inline]
    pub fn mass_factor(&self, a: usize, b: usize) -> T {
        let denom = if self.arity == 3 { lit::<T>(12.0) } else { lit::<T>(6.0) };
        if a == b {
            lit::<T>(2.0) / denom
        } else {
            T::one() / denom
        }
    }
}

/// Continuous piecewise linear functions on a mesh, with Dirichlet flags.
#[derive(Clone, Debug, PartialEq)]
pub struct P1Space<T> {
    coords: Vec<Vec3<T>>,
    elements: Vec<Element<T>>,
    boundary: Vec<bool>,
    h: T,
    topo_dim: usize,
}

impl<T: Real> P1Space<T> {
    /// Flat triangles with vertices at `coords`; `density` is evaluated at
    /// each triangle's centroid and multiplies its area.
    pub fn from_triangles(
        coords: Vec<Vec3<T>>,
        triangles: &[[usize; 3]],
        boundary: Vec<bool>,
        density: impl Fn(&Vec3<T>) -> T,
    ) -> Result<Self> {
        if boundary.len() != coords.len() {
            return Err(Error::MeshError("boundary flags do not match vertices".into()));
        }
        let mut elements = Vec::with_capacity(triangles.len());
        let mut h = T::zero();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= coords.len()) {
                return Err(Error::MeshError(format!("triangle {t} references a missing vertex")));
            }
            let x = [coords[tri[0]], coords[tri[1]], coords[tri[2]]];
            let n = cross3(&sub3(&x[1], &x[0]), &sub3(&x[2], &x[0]));
            let twice_area = norm3(&n);
            let scale = (0..3)
                .map(|i| norm3(&sub3(&x[(i + 1) % 3], &x[i])))
                .fold(T::zero(), T::max);
            h = h.max(scale);
            if !(twice_area > T::epsilon() * lit(16.0) * scale * scale) {
                return Err(Error::MeshError(format!("triangle {t} has zero area")));
            }
            let nhat = scale3(T::one() / twice_area, &n);
            let mut grads = [[T::zero(); 3]; 3];
            for i in 0..3 {
                let opp = sub3(&x[(i + 2) % 3], &x[(i + 1) % 3]);
                grads[i] = scale3(T::one() / twice_area, &cross3(&nhat, &opp));
            }
            let third = T::one() / lit(3.0);
            let centroid = [
                (x[0][0] + x[1][0] + x[2][0]) * third,
                (x[0][1] + x[1][1] + x[2][1]) * third,
                (x[0][2] + x[1][2] + x[2][2]) * third,
            ];
            elements.push(Element {
                nodes: *tri,
                arity: 3,
                measure: twice_area * lit(0.5) * density(&centroid),
                grads,
            });
        }
        Ok(Self {
            coords,
            elements,
            boundary,
            h,
            topo_dim: 2,
        })
    }

    /// Intervals between consecutive `nodes`; `density` is evaluated at
    /// each midpoint.
    pub fn from_intervals(nodes: &[T], boundary: Vec<bool>, density: impl Fn(T) -> T) -> Result<Self> {
        if nodes.len() < 2 || boundary.len() != nodes.len() {
            return Err(Error::MeshError("interval mesh needs >= 2 nodes with flags".into()));
        }
        let mut elements = Vec::with_capacity(nodes.len() - 1);
        let mut h = T::zero();
        for i in 0..nodes.len() - 1 {
            let len = nodes[i + 1] - nodes[i];
            if !(len > T::zero()) {
                return Err(Error::MeshError(format!("interval {i} has nonpositive length")));
            }
            h = h.max(len);
            let mid = (nodes[i] + nodes[i + 1]) * lit(0.5);
            let z = T::zero();
            elements.push(Element {
                nodes: [i, i + 1, usize::MAX],
                arity: 2,
                measure: len * density(mid),
                grads: [[-T::one() / len, z, z], [T::one() / len, z, z], [z, z, z]],
            });
        }
        Ok(Self {
            coords: nodes.iter().map(|&t| [t, T::zero(), T::zero()]).collect(),
            elements,
            boundary,
            h,
            topo_dim: 1,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Vec3<T>] {
        &self.coords
    }

    pub fn elements(&self) -> &[Element<T>] {
        &self.elements
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| !self.boundary[i]).collect()
    }

    /// Largest element diameter.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn topological_dim(&self) -> usize {
        self.topo_dim
    }

    /// `∫ f(u) dS` with the nodal (trapezoid) rule on each element.
    pub fn integrate_nodal(&self, values: &[T], f: impl Fn(T) -> T) -> T {
        self.elements
            .iter()
            .map(|e| {
                let s: T = e.local().iter().map(|&i| f(values[i])).sum();
                e.measure * s / T::from_usize_lossy(e.arity)
            })
            .sum()
    }

    /// `∫ g(mean u, grad u) dS` with one point per element.
    pub fn integrate_elementwise(&self, values: &[T], g: impl Fn(T, &Vec3<T>) -> T) -> T {
        self.elements
            .iter()
            .map(|e| e.measure * g(e.mean(values), &e.gradient(values)))
            .sum()
    }

    /// Nodal gradients: element gradients averaged with measure weights.
    pub fn nodal_gradients(&self, values: &[T]) -> Vec<Vec3<T>> {
        let mut acc = vec![[T::zero(); 3]; self.n_nodes()];
        let mut wsum = vec![T::zero(); self.n_nodes()];
        for e in &self.elements {
            let g = e.gradient(values);
            for &i in e.local() {
                for k in 0..3 {
                    acc[i][k] = acc[i][k] + e.measure * g[k];
                }
                wsum[i] = wsum[i] + e.measure;
            }
        }
        acc.iter()
            .zip(&wsum)
            .map(|(g, &w)| if w > T::zero() { scale3(T::one() / w, g) } else { *g })
            .collect()
    }
}

/// Nodal values of a P1 function on a shared space.
#[derive(Clone, Debug)]
pub struct DiscreteField<T> {
    space: Arc<P1Space<T>>,
    values: Vec<T>,
}

impl<T: Real> DiscreteField<T> {
    pub fn new(space: Arc<P1Space<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != space.n_nodes() {
            return Err(Error::MeshError(format!(
                "field has {} values for {} nodes",
                values.len(),
                space.n_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MeshError(format!("non-finite value at node {i}")));
        }
        Ok(Self { space, values })
    }

    /// Nodal interpolant of `f`, with boundary nodes set to zero.
    pub fn interpolate(space: Arc<P1Space<T>>, f: impl Fn(&Vec3<T>) -> T) -> Result<Self> {
        let values = space
            .coords()
            .iter()
            .zip(space.boundary())
            .map(|(x, &b)| if b { T::zero() } else { f(x) })
            .collect();
        Self::new(space, values)
    }

    pub fn space(&self) -> &Arc<P1Space<T>> {
        &self.space
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn boundary_max(&self) -> T {
        self.values
            .iter()
            .zip(self.space.boundary())
            .filter(|(_, &b)| b)
            .fold(T::zero(), |m, (v, _)| m.max(v.abs()))
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn integral_abs(&self) -> T {
        self.space.integrate_nodal(&self.values, |v| v.abs())
    }

    pub fn lp_norm(&self, p: T) -> T {
        self.space
            .integrate_nodal(&self.values, |v| v.abs().powf(p))
            .powf(T::one() / p)
    }

    pub fn min_interior(&self) -> Option<(usize, T)> {
        self.space
            .interior_nodes()
            .into_iter()
            .map(|i| (i, self.values[i]))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    }
}

#[inline]
pub(crate) fn norm2<T: Real>(g: &Vec3<T>) -> T {
    dot3(g, g)
}
