//! Exponent/eigenfunction pairs shared by the shooting and finite element
//! solvers.

use std::sync::Arc;

use crate::error::Result;
use crate::fem::{DiscreteField, IntervalMesh};
use crate::geometry::Branch;
use crate::ode::ColatGrid;
use crate::scalar::Real;

/// A discrete eigenfunction: a colatitude profile or a nodal field.
#[derive(Clone, Debug)]
pub enum Profile<T> {
    Colat(ColatGrid<T>),
    Mesh(DiscreteField<T>),
}

impl<T: Real> Profile<T> {
    pub fn as_colat(&self) -> Option<&ColatGrid<T>> {
        match self {
            Profile::Colat(g) => Some(g),
            Profile::Mesh(_) => None,
        }
    }

    pub fn as_field(&self) -> Option<&DiscreteField<T>> {
        match self {
            Profile::Mesh(f) => Some(f),
            Profile::Colat(_) => None,
        }
    }

    /// Nodal field; profiles become P1 fields on their own grid nodes, with
    /// `dim` selecting the arc or cap-meridian measure.
    pub fn to_field(&self, dim: usize) -> Result<DiscreteField<T>> {
        match self {
            Profile::Mesh(f) => Ok(f.clone()),
            Profile::Colat(g) => {
                let space = IntervalMesh::from_nodes(g.nodes().to_vec(), dim)?.space()?;
                let values = g
                    .values()
                    .iter()
                    .zip(space.boundary())
                    .map(|(&v, &b)| if b { T::zero() } else { v })
                    .collect();
                DiscreteField::new(Arc::new(space), values)
            }
        }
    }

    pub fn sup_norm(&self) -> T {
        match self {
            Profile::Colat(g) => g.sup_norm(),
            Profile::Mesh(f) => f.sup_norm(),
        }
    }

    pub fn integral_abs(&self, dim: usize) -> T {
        match self {
            Profile::Colat(g) => g.integral_abs(dim),
            Profile::Mesh(f) => f.integral_abs(),
        }
    }

    pub fn lp_norm(&self, dim: usize, p: T) -> T {
        match self {
            Profile::Colat(g) => g.lp_norm(dim, p),
            Profile::Mesh(f) => f.lp_norm(p),
        }
    }

    /// Smallest value over interior nodes.
    pub fn min_interior(&self) -> T {
        match self {
            Profile::Colat(g) => {
                let v = g.values();
                let start = if g.derivs()[0] == T::zero() { 0 } else { 1 };
                v[start..v.len() - 1].iter().copied().fold(T::infinity(), T::min)
            }
            Profile::Mesh(f) => f.min_interior().map(|(_, v)| v).unwrap_or(T::infinity()),
        }
    }
}

/// An exponent `β` with its principal eigenfunction.
#[derive(Clone, Debug)]
pub struct Eigenpair<T> {
    pub beta: T,
    pub omega: Profile<T>,
    pub branch: Branch,
    /// Shooting: relative boundary defect `|w(alpha)| / sup|w|`.
    /// Finite elements: discrete dual norm of the weak residual.
    pub residual_norm: T,
    pub iterations: usize,
}
