//! Piecewise linear finite elements for the spherical eigenvalue problem on
//! arcs, cap meridians and triangulated patches of `S^2`.

mod assemble;
mod mesh;
mod solve;
mod space;

pub use assemble::{
    assemble_linearized, assemble_weighted, dual_norm, eigen_residual_vector, element_weight, evaluate_residual,
    h1_gram, linearized_coefficients, p_laplacian_residual, WeightedForms,
};
pub use mesh::{IntervalMesh, SurfaceMesh};
pub use solve::{
    frozen_eigen_mu, principal_eigenpair, solve_nonlinear, solve_nonlinear_with, EigenOptions, NonlinearOptions,
    NonlinearSolution,
};
pub use space::{DiscreteField, Element, P1Space};
