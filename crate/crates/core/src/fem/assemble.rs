use rayon::prelude::*;

use super::space::{norm2, Element, P1Space};
use crate::error::{Error, Result};
use crate::geometry::PParams;
use crate::linalg::{SparseSym, Triplets};
use crate::scalar::{dot3, lit, Real, Vec3};

/// Weighted stiffness and mass matrices over all nodes.
#[derive(Clone, Debug)]
pub struct WeightedForms<T> {
    pub stiffness: SparseSym<T>,
    pub mass: SparseSym<T>,
    /// Per-element weights `(β² w̄² + |∇w̄|² + ε²)^{(p-2)/2}`.
    pub weights: Vec<T>,
}

/// Element weight of the eigenvalue problem from element averages.
#[inline]
pub fn element_weight<T: Real>(params: &PParams<T>, beta: T, e: &Element<T>, omega: &[T], eps: T) -> T {
    let m = e.mean(omega);
    let g = e.gradient(omega);
    let q = beta * beta * m * m + norm2(&g) + eps * eps;
    if params.p() == lit(2.0) {
        T::one()
    } else {
        q.powf(params.weight_exponent())
    }
}

fn assemble_local<T: Real, F>(space: &P1Space<T>, local: F) -> SparseSym<T>
where
    F: Fn(usize, &Element<T>) -> [[T; 3]; 3] + Sync,
{
    let blocks: Vec<[[T; 3]; 3]> = space
        .elements()
        .par_iter()
        .enumerate()
        .map(|(k, e)| local(k, e))
        .collect();
    let mut t = Triplets::with_capacity(space.n_nodes(), 9 * blocks.len());
    for (e, blk) in space.elements().iter().zip(&blocks) {
        for (a, &i) in e.local().iter().enumerate() {
            for (b, &j) in e.local().iter().enumerate() {
                t.add(i, j, blk[a][b]);
            }
        }
    }
    t.build()
}

/// Stiffness `∫ w ∇φ_i·∇φ_j` and mass `∫ w φ_i φ_j` with the one point
/// weight of `omega_frozen`.
pub fn assemble_weighted<T: Real>(
    space: &P1Space<T>,
    params: &PParams<T>,
    beta: T,
    omega_frozen: &[T],
    eps: T,
) -> Result<WeightedForms<T>> {
    if omega_frozen.len() != space.n_nodes() {
        return Err(Error::MeshError("frozen field does not match the mesh".into()));
    }
    if !(eps >= T::zero()) {
        return Err(Error::InvalidParams(format!("regularization must be >= 0, got {eps}")));
    }
    let weights: Vec<T> = space
        .elements()
        .par_iter()
        .map(|e| element_weight(params, beta, e, omega_frozen, eps))
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::DegenerateWeight {
            p: params.p().to_f64_lossy(),
        });
    }
    let stiffness = assemble_local(space, |k, e| {
        let w = weights[k] * e.measure;
        let mut blk = [[T::zero(); 3]; 3];
        for a in 0..e.arity {
            for b in 0..e.arity {
                blk[a][b] = w * dot3(&e.grads[a], &e.grads[b]);
            }
        }
        blk
    });
    let mass = assemble_local(space, |k, e| {
        let w = weights[k] * e.measure;
        let mut blk = [[T::zero(); 3]; 3];
        for a in 0..e.arity {
            for b in 0..e.arity {
                blk[a][b] = w * e.mass_factor(a, b);
            }
        }
        blk
    });
    Ok(WeightedForms {
        stiffness,
        mass,
        weights,
    })
}

/// Coefficient matrix `|g|^{p-4}((p-2) g gᵀ + |g|² I)` with `|g|²`
/// regularized by `eps²`.
#[inline]
pub fn linearized_coefficients<T: Real>(p: T, g: &Vec3<T>, eps: T) -> [[T; 3]; 3] {
    let s = norm2(g) + eps * eps;
    let scale = if s > T::zero() { s.powf((p - lit(4.0)) / lit(2.0)) } else { T::zero() };
    let mut b = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { s } else { T::zero() };
            b[i][j] = scale * ((p - lit(2.0)) * g[i] * g[j] + delta);
        }
    }
    b
}

/// Divergence form operator with the linearized coefficients of the
/// p-Laplacian at `v`: the Jacobian of [`p_laplacian_residual`].
pub fn assemble_linearized<T: Real>(space: &P1Space<T>, v: &[T], params: &PParams<T>, eps: T) -> SparseSym<T> {
    let p = params.p();
    assemble_local(space, |_, e| {
        let b = linearized_coefficients(p, &e.gradient(v), eps);
        let mut blk = [[T::zero(); 3]; 3];
        for a in 0..e.arity {
            let mut bg = [T::zero(); 3];
            for i in 0..3 {
                bg[i] = (0..3).map(|j| b[i][j] * e.grads[a][j]).sum();
            }
            for c in 0..e.arity {
                blk[a][c] = e.measure * dot3(&bg, &e.grads[c]);
            }
        }
        blk
    })
}

/// Weak p-Laplacian `R_i = ∫ (|∇v|² + ε²)^{(p-2)/2} ∇v·∇φ_i` at all nodes.
pub fn p_laplacian_residual<T: Real>(space: &P1Space<T>, v: &[T], p: T, eps: T) -> Vec<T> {
    let mut r = vec![T::zero(); space.n_nodes()];
    for e in space.elements() {
        let g = e.gradient(v);
        let s = norm2(&g) + eps * eps;
        let w = if s > T::zero() { s.powf((p - lit(2.0)) / lit(2.0)) } else { T::zero() };
        for (a, &i) in e.local().iter().enumerate() {
            r[i] = r[i] + e.measure * w * dot3(&g, &e.grads[a]);
        }
    }
    r
}

/// Weak residual of the eigenvalue problem at all nodes:
/// `∫ w ∇ω·∇φ_i - (p-1)β(β-β0) ∫ w ω φ_i` with `w = q^{(p-2)/2}`.
/// Elements with `q = 0` contribute nothing.
pub fn eigen_residual_vector<T: Real>(space: &P1Space<T>, params: &PParams<T>, beta: T, omega: &[T], eps: T) -> Vec<T> {
    let lambda = params.eigen_factor(beta);
    let mut r = vec![T::zero(); space.n_nodes()];
    for e in space.elements() {
        let m = e.mean(omega);
        let g = e.gradient(omega);
        let q = beta * beta * m * m + norm2(&g) + eps * eps;
        if q == T::zero() {
            continue;
        }
        let w = if params.p() == lit(2.0) { T::one() } else { q.powf(params.weight_exponent()) };
        for (a, &i) in e.local().iter().enumerate() {
            let mut mass_term = T::zero();
            for (b, &j) in e.local().iter().enumerate() {
                mass_term = mass_term + e.mass_factor(a, b) * omega[j];
            }
            r[i] = r[i] + w * e.measure * (dot3(&g, &e.grads[a]) - lambda * mass_term);
        }
    }
    r
}

/// Unweighted `H^1` Gram matrix (stiffness plus mass) over all nodes.
pub fn h1_gram<T: Real>(space: &P1Space<T>) -> SparseSym<T> {
    assemble_local(space, |_, e| {
        let mut blk = [[T::zero(); 3]; 3];
        for a in 0..e.arity {
            for b in 0..e.arity {
                blk[a][b] = e.measure * (dot3(&e.grads[a], &e.grads[b]) + e.mass_factor(a, b));
            }
        }
        blk
    })
}

/// Discrete `H^{-1}` norm of a nodal functional over the interior nodes.
pub fn dual_norm<T: Real>(space: &P1Space<T>, r: &[T]) -> Result<T> {
    let keep = space.interior_nodes();
    if keep.is_empty() {
        return Ok(T::zero());
    }
    let gram = h1_gram(space).restrict(&keep);
    let rr: Vec<T> = keep.iter().map(|&i| r[i]).collect();
    let z = gram.cholesky()?.solve(&rr);
    Ok(rr.iter().zip(&z).map(|(a, b)| *a * *b).sum::<T>().max(T::zero()).sqrt())
}

/// Dual norm of the weak residual of the eigenvalue problem at `(beta, omega)`
/// with the exact (unregularized) weight.
pub fn evaluate_residual<T: Real>(space: &P1Space<T>, params: &PParams<T>, beta: T, omega: &[T]) -> Result<T> {
    if omega.len() != space.n_nodes() {
        return Err(Error::MeshError("field does not match the mesh".into()));
    }
    dual_norm(space, &eigen_residual_vector(space, params, beta, omega, T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{IntervalMesh, SurfaceMesh};

    fn two_triangles() -> P1Space<f64> {
        let s = 0.3f64;
        let raw = [[0.0, 0.0], [s, 0.0], [0.0, s], [s, s]];
        let coords = raw
            .iter()
            .map(|&[x, y]| {
                let n = (x * x + y * y + 1.0f64).sqrt();
                [x / n, y / n, 1.0 / n]
            })
            .collect();
        P1Space::from_triangles(coords, &[[0, 1, 2], [1, 3, 2]], vec![false; 4], |_| 1.0).unwrap()
    }

    #[test]
    fn p2_weights_are_one() {
        let s = two_triangles();
        let params = PParams::new(2.0, 3).unwrap();
        let f = assemble_weighted(&s, &params, 1.7, &[0.3, 0.1, 0.2, 0.9], 1e-3).unwrap();
        assert!(f.weights.iter().all(|&w| w == 1.0));
        assert!(f.stiffness.max_asymmetry() < 1e-15);
        // stiffness annihilates constants
        let k1 = f.stiffness.matvec(&[1.0; 4]);
        assert!(k1.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_field_weight() {
        let s = two_triangles();
        let params = PParams::new(4.0, 3).unwrap();
        let c = 0.7;
        let eps = 1e-3;
        let f = assemble_weighted(&s, &params, 1.0, &[c; 4], eps).unwrap();
        for &w in &f.weights {
            assert!((w - (c * c + eps * eps)).abs() < 1e-15);
        }
    }

    #[test]
    fn random_field_weights_match_direct_evaluation() {
        let s = two_triangles();
        let params = PParams::new(3.3, 3).unwrap();
        let omega = [0.41, 0.93, 0.17, 0.58];
        let (beta, eps) = (1.3, 2e-3);
        let f = assemble_weighted(&s, &params, beta, &omega, eps).unwrap();
        for (e, &w) in s.elements().iter().zip(&f.weights) {
            // independent recomputation from raw vertex data
            let idx = e.nodes;
            let x: Vec<[f64; 3]> = idx.iter().map(|&i| s.coords()[i]).collect();
            let d1 = sub(x[1], x[0]);
            let d2 = sub(x[2], x[0]);
            let (a11, a12, a22) = (dot(d1, d1), dot(d1, d2), dot(d2, d2));
            let det = a11 * a22 - a12 * a12;
            let (u1, u2) = (omega[idx[1]] - omega[idx[0]], omega[idx[2]] - omega[idx[0]]);
            // |∇u|² = [u1 u2] G⁻¹ [u1 u2]ᵀ with G the edge Gram matrix
            let grad2 = (a22 * u1 * u1 - 2.0 * a12 * u1 * u2 + a11 * u2 * u2) / det;
            let mean = (omega[idx[0]] + omega[idx[1]] + omega[idx[2]]) / 3.0;
            let expect = (beta * beta * mean * mean + grad2 + eps * eps).powf((3.3 - 2.0) / 2.0);
            assert!((w - expect).abs() < 1e-13 * expect, "{w} vs {expect}");
        }
    }

    fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[test]
    fn linearized_coefficients_examples() {
        let b = linearized_coefficients(2.0, &[0.3, -0.2, 0.1], 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let id: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((b[i][j] - id).abs() < 1e-15);
            }
        }
        let b = linearized_coefficients(4.0, &[1.0, 0.0, 0.0], 0.0);
        assert_eq!(b, [[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn linearized_operator_is_residual_jacobian() {
        let mesh = SurfaceMesh::cap(1.0, 4).unwrap();
        let s = mesh.space().unwrap();
        let params = PParams::new(3.0, 3).unwrap();
        let n = s.n_nodes();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 101.0 + 0.1 * s.coords()[i][0]).collect();
        let w: Vec<f64> = (0..n).map(|i| ((i * 104729) % 53) as f64 / 53.0 - 0.5).collect();
        let eps = 1e-8;
        let l = assemble_linearized(&s, &v, &params, eps);
        let lw = l.matvec(&w);
        let t = 1e-6;
        let plus: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + t * b).collect();
        let minus: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - t * b).collect();
        let rp = p_laplacian_residual(&s, &plus, 3.0, eps);
        let rm = p_laplacian_residual(&s, &minus, 3.0, eps);
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * t)).collect();
        let scale = lw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = lw.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-6 * scale, "err {err}, scale {scale}");
        // applied to v itself the linearization is (p-1) times the p-Laplacian
        let lv = l.matvec(&v);
        let r = p_laplacian_residual(&s, &v, 3.0, eps);
        for (a, b) in lv.iter().zip(&r) {
            assert!((a - 2.0 * b).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn arc_residual_of_interpolated_sine_is_second_order() {
        let params = PParams::new(2.0, 2).unwrap();
        let alpha = 1.2f64;
        let beta = std::f64::consts::PI / alpha;
        let res = |n: usize| {
            let s = IntervalMesh::uniform(alpha, n, 2).unwrap().space().unwrap();
            let omega: Vec<f64> = s.coords().iter().map(|x| (beta * x[0]).sin()).collect();
            evaluate_residual(&s, &params, beta, &omega).unwrap()
        };
        let (r1, r2) = (res(64), res(128));
        assert!(r2 < r1 / 3.5, "{r1} {r2}");
    }
}
