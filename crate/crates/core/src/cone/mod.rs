//! p-harmonic Dirichlet problems on truncated cones over arcs and caps.
//!
//! A cone over an arc of opening `α` is a planar sector; a cone over a cap
//! is reduced to its meridian half plane. Both are discretized in log-polar
//! coordinates `(s, θ) = (ln r, θ)` on `[ln a, ln b] × [0, α]`, where the
//! p-Dirichlet energy becomes `∫ ρ |∇̃u|^p ds dθ` with
//! `ρ = e^{(N-p)s} J(θ)`, `J = 1` for arcs and `sin^{N-2}θ` for caps.

mod band;
mod decay;
mod family;

use std::sync::Arc;

pub use band::{band_refinement, band_report, band_samples, nondegeneracy_check, BandRefinement, BandReport, BandSample};
pub use decay::{decay_exponent, decay_fit, DecayExponent, DecayFit};
pub use family::{
    contraction_check, deformation_family, sandwich_check, tau_lipschitz_check, ContractionReport, LipschitzReport,
    SandwichReport, Shell, TauFamily,
};

use crate::error::{Error, Result};
use crate::fem::{assemble_linearized, assemble_weighted, p_laplacian_residual, P1Space};
use crate::exponent::pullback;
use crate::geometry::{Branch, PParams, SphericalDomain};
use crate::ode::solve_beta;
use crate::scalar::{lit, Real};

/// `C_S ∩ (B_b \ B̄_a)` for an arc or a cap `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeDomain<T> {
    section: SphericalDomain<T>,
    a: T,
    b: T,
}

impl<T: Real> ConeDomain<T> {
    pub fn new(section: SphericalDomain<T>, a: T, b: T) -> Result<Self> {
        if !matches!(section, SphericalDomain::Arc { .. } | SphericalDomain::Cap { .. }) {
            return Err(Error::InvalidDomain("cones are built over arcs and caps only".into()));
        }
        if !(a > T::zero() && b > a && b.is_finite()) {
            return Err(Error::InvalidParams(format!("need 0 < a < b, got a = {a}, b = {b}")));
        }
        Ok(Self { section, a, b })
    }

    pub fn section(&self) -> &SphericalDomain<T> {
        &self.section
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn alpha(&self) -> T {
        self.section.alpha().expect("arc or cap")
    }

    pub fn dim(&self) -> usize {
        self.section.dim()
    }

    pub fn is_cap(&self) -> bool {
        matches!(self.section, SphericalDomain::Cap { .. })
    }

    /// Angle of the point of `S` farthest from `∂S`.
    pub fn incenter_angle(&self) -> T {
        if self.is_cap() {
            T::zero()
        } else {
            self.alpha() * lit(0.5)
        }
    }

    /// Angular distance from `θ` to the lateral boundary.
    pub fn boundary_angle(&self, theta: T) -> T {
        if self.is_cap() {
            self.alpha() - theta
        } else {
            theta.min(self.alpha() - theta)
        }
    }
}

/// Outer boundary condition on `r = b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outer<T> {
    /// `u = 0`.
    Zero,
    /// `u(b, θ) = (a/b)^γ g(θ)` with `g` the inner trace: the outer trace of
    /// the separable solution with exponent `γ`.
    Decay(T),
}

/// Structured log-polar triangulation of a cone.
#[derive(Clone, Debug)]
pub struct ConeGrid<T> {
    cone: ConeDomain<T>,
    params: PParams<T>,
    s: Vec<T>,
    theta: Vec<T>,
    space: Arc<P1Space<T>>,
}

impl<T: Real> ConeGrid<T> {
    /// `n_theta` angular intervals and as many radial ones as make the
    /// cells square in `(s, θ)`.
    pub fn new(cone: ConeDomain<T>, params: PParams<T>, n_theta: usize) -> Result<Self> {
        let h = cone.alpha() / T::from_usize_lossy(n_theta.max(1));
        let len = (cone.b() / cone.a()).ln();
        let n_s = (len / h).ceil().to_usize().unwrap_or(1).max(2);
        Self::with_counts(cone, params, n_s, n_theta)
    }

    pub fn with_counts(cone: ConeDomain<T>, params: PParams<T>, n_s: usize, n_theta: usize) -> Result<Self> {
        if n_s < 2 || n_theta < 2 {
            return Err(Error::MeshError(format!("cone grid needs >= 2 intervals per direction, got {n_s} x {n_theta}")));
        }
        if params.dim() != cone.dim() {
            return Err(Error::InvalidParams(format!(
                "parameters are for N = {} but the cone lives in R^{}",
                params.dim(),
                cone.dim()
            )));
        }
        let (s0, s1) = (cone.a().ln(), cone.b().ln());
        let alpha = cone.alpha();
        let s: Vec<T> = (0..=n_s)
            .map(|j| s0 + (s1 - s0) * T::from_usize_lossy(j) / T::from_usize_lossy(n_s))
            .collect();
        let theta: Vec<T> = (0..=n_theta)
            .map(|i| alpha * T::from_usize_lossy(i) / T::from_usize_lossy(n_theta))
            .collect();
        let cols = n_theta + 1;
        let mut coords = Vec::with_capacity(s.len() * cols);
        let mut boundary = Vec::with_capacity(s.len() * cols);
        for (j, &sj) in s.iter().enumerate() {
            for (i, &ti) in theta.iter().enumerate() {
                coords.push([sj, ti, T::zero()]);
                let lateral = i == n_theta || (i == 0 && !cone.is_cap());
                boundary.push(j == 0 || j == n_s || lateral);
            }
        }
        let mut tris = Vec::with_capacity(2 * n_s * n_theta);
        for j in 0..n_s {
            for i in 0..n_theta {
                let n00 = j * cols + i;
                let n10 = n00 + cols;
                tris.push([n00, n10, n10 + 1]);
                tris.push([n00, n10 + 1, n00 + 1]);
            }
        }
        let power = T::from_usize_lossy(params.dim()) - params.p();
        let cap_power = params.dim() as i32 - 2;
        let is_cap = cone.is_cap();
        let space = P1Space::from_triangles(coords, &tris, boundary, |c| {
            let jac = if is_cap { c[1].sin().powi(cap_power) } else { T::one() };
            (power * c[0]).exp() * jac
        })?;
        Ok(Self {
            cone,
            params,
            s,
            theta,
            space: Arc::new(space),
        })
    }

    pub fn cone(&self) -> &ConeDomain<T> {
        &self.cone
    }

    pub fn params(&self) -> &PParams<T> {
        &self.params
    }

    /// Log radii of the grid rows.
    pub fn s(&self) -> &[T] {
        &self.s
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn radius(&self, j: usize) -> T {
        self.s[j].exp()
    }

    pub fn space(&self) -> &Arc<P1Space<T>> {
        &self.space
    }

    pub fn n_rows(&self) -> usize {
        self.s.len()
    }

    pub fn n_cols(&self) -> usize {
        self.theta.len()
    }

    #[inline]
    pub fn index(&self, j: usize, i: usize) -> usize {
        j * self.theta.len() + i
    }

    /// Largest cell side in `(s, θ)`, a relative mesh size in physical terms.
    pub fn h(&self) -> T {
        (self.s[1] - self.s[0]).max(self.theta[1] - self.theta[0])
    }

    /// Whether the angle index lies on the lateral boundary.
    pub fn is_lateral(&self, i: usize) -> bool {
        i + 1 == self.theta.len() || (i == 0 && !self.cone.is_cap())
    }

    /// Index of the angle node closest to `theta`.
    pub fn nearest_angle(&self, theta: T) -> usize {
        let h = self.theta[1] - self.theta[0];
        (theta / h).round().to_usize().unwrap_or(0).min(self.theta.len() - 1)
    }

    /// Samples a closed-form profile at the angle nodes, zero on the lateral
    /// boundary.
    pub fn sample_profile(&self, f: impl Fn(T) -> T) -> Vec<T> {
        (0..self.theta.len())
            .map(|i| if self.is_lateral(i) { T::zero() } else { f(self.theta[i]) })
            .collect()
    }
}

/// Newton and Picard settings of [`solve_truncated`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeOptions<T> {
    /// Stop when the Newton update is below `tol` relative to `max |u|`.
    pub tol: T,
    /// Leave the frozen-weight iteration once its relative change is below this.
    pub picard_switch: T,
    pub picard_max: usize,
    pub newton_max: usize,
    /// Regularization `ε = eps0 · max |data|` of `|∇u|²`.
    pub eps0: T,
}

impl<T: Real> Default for ConeOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit::<T>(1e-11).max(T::epsilon() * lit(100.0)),
            picard_switch: lit(1e-2),
            picard_max: 30,
            newton_max: 80,
            eps0: lit(1e-9),
        }
    }
}

/// Iteration counts of a cone solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub picard: usize,
    pub newton: usize,
    /// Final relative Newton update.
    pub update: f64,
}

/// Nodal values of a function on a [`ConeGrid`].
#[derive(Clone, Debug)]
pub struct ConeField<T> {
    grid: Arc<ConeGrid<T>>,
    values: Vec<T>,
    outer: Outer<T>,
    stats: SolveStats,
}

impl<T: Real> ConeField<T> {
    /// Interpolates `f(r, θ)`.
    pub fn from_fn(grid: &Arc<ConeGrid<T>>, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.n_rows() * grid.n_cols());
        for j in 0..grid.n_rows() {
            let r = grid.radius(j);
            for &t in grid.theta() {
                values.push(f(r, t));
            }
        }
        Self {
            grid: grid.clone(),
            values,
            outer: Outer::Zero,
            stats: SolveStats::default(),
        }
    }

    /// The separable field `r^{-β} η(θ)` from angle-node samples.
    pub fn separable(grid: &Arc<ConeGrid<T>>, beta: T, eta: &[T]) -> Self {
        let mut values = Vec::with_capacity(grid.n_rows() * grid.n_cols());
        for j in 0..grid.n_rows() {
            let scale = grid.radius(j).powf(-beta);
            values.extend(eta.iter().map(|&v| scale * v));
        }
        Self {
            grid: grid.clone(),
            values,
            outer: Outer::Zero,
            stats: SolveStats::default(),
        }
    }

    pub fn grid(&self) -> &Arc<ConeGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn outer(&self) -> Outer<T> {
        self.outer
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    #[inline]
    pub fn at(&self, j: usize, i: usize) -> T {
        self.values[self.grid.index(j, i)]
    }

    /// `(r, u)` along the angle node `i`.
    pub fn ray(&self, i: usize) -> Vec<(T, T)> {
        (0..self.grid.n_rows()).map(|j| (self.grid.radius(j), self.at(j, i))).collect()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Traces of the principal eigenfunctions of `S_δ ⊂ S ⊂ S'_δ`, transplanted
/// to the angles of a grid over `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct TracePair<T> {
    /// Exponent of `S` itself.
    pub beta: T,
    /// Eigenfunction of `S`, unit maximum.
    pub base: Vec<T>,
    pub beta_inner: T,
    pub beta_outer: T,
    /// Eigenfunction of the shrunk section.
    pub omega: Vec<T>,
    /// Eigenfunction of the expanded section.
    pub omega_prime: Vec<T>,
}

/// Solves the profile problem on `S` and on the sections shrunk and
/// expanded by `delta`, and samples both approximating profiles on the
/// grid angles through [`crate::exponent::pullback`].
pub fn approximation_pair<T: Real>(grid: &ConeGrid<T>, branch: Branch, delta: T, tol: T) -> Result<TracePair<T>> {
    let section = grid.cone().section();
    let params = grid.params();
    let alpha = grid.cone().alpha();
    let base = solve_beta(params, section, branch, tol)?;
    let inner = solve_beta(params, &section.shrink(delta)?, branch, tol)?;
    let outer = solve_beta(params, &section.expand(delta)?, branch, tol)?;
    let n = 8 * (grid.n_cols() - 1);
    let sample = |pair: &crate::eigen::Eigenpair<T>| -> Result<Vec<T>> {
        let profile = pair
            .omega
            .as_colat()
            .ok_or_else(|| Error::InvalidDomain("profile is not axisymmetric".into()))?;
        if profile.alpha() == alpha {
            return Ok(grid.sample_profile(|t| profile.eval(t).max(T::zero())));
        }
        let moved = pullback(profile, alpha, n)?;
        Ok(grid.sample_profile(|t| moved.eval(t).max(T::zero())))
    };
    let mut own = sample(&base)?;
    let top = own.iter().fold(T::zero(), |m, v| m.max(*v));
    own.iter_mut().for_each(|v| *v = *v / top);
    Ok(TracePair {
        beta: base.beta,
        base: own,
        beta_inner: inner.beta,
        beta_outer: outer.beta,
        omega: sample(&inner)?,
        omega_prime: sample(&outer)?,
    })
}

/// Discrete p-harmonic function on the truncated cone with trace `inner`
/// (angle-node samples) on `r = a`, the `outer` condition on `r = b` and
/// zero on the lateral boundary.
///
/// A weighted Laplace solve starts a damped frozen-weight iteration, which
/// hands over to Newton's method on the p-Dirichlet energy with a
/// backtracking line search.
pub fn solve_truncated<T: Real>(
    grid: &Arc<ConeGrid<T>>,
    inner: &[T],
    outer: Outer<T>,
    opts: &ConeOptions<T>,
) -> Result<ConeField<T>> {
    let cols = grid.n_cols();
    if inner.len() != cols {
        return Err(Error::InvalidParams(format!(
            "inner trace has {} samples, the grid has {cols} angles",
            inner.len()
        )));
    }
    if let Some(i) = (0..cols).find(|&i| !grid.is_lateral(i) && inner[i] < T::zero()) {
        return Err(Error::PositivityError { node: i, value: inner[i].to_f64_lossy() });
    }
    let space = grid.space();
    let params = grid.params();
    let p = params.p();
    let last = grid.n_rows() - 1;
    let outer_scale = match outer {
        Outer::Zero => T::zero(),
        Outer::Decay(gamma) => (grid.cone().a() / grid.cone().b()).powf(gamma),
    };
    let mut u = vec![T::zero(); space.n_nodes()];
    for i in 0..cols {
        if grid.is_lateral(i) {
            continue;
        }
        u[grid.index(0, i)] = inner[i];
        u[grid.index(last, i)] = outer_scale * inner[i];
    }
    let data_scale = inner.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mut stats = SolveStats::default();
    let field = |values, stats| ConeField {
        grid: grid.clone(),
        values,
        outer,
        stats,
    };
    if data_scale == T::zero() {
        return Ok(field(u, stats));
    }
    let keep = space.interior_nodes();
    let laplace = PParams::new(lit(2.0), params.dim())?;
    let stiffness = assemble_weighted(space, &laplace, T::zero(), &u, T::zero())?.stiffness;
    dirichlet_solve(&stiffness, &keep, &mut u)?;
    if p == lit(2.0) {
        return Ok(field(u, stats));
    }

    let eps = opts.eps0 * data_scale;
    for _ in 0..opts.picard_max {
        stats.picard += 1;
        let frozen = assemble_weighted(space, params, T::zero(), &u, eps)?.stiffness;
        let mut next = u.clone();
        dirichlet_solve(&frozen, &keep, &mut next)?;
        let mut change = T::zero();
        for &k in &keep {
            let d = next[k] - u[k];
            change = change.max(d.abs());
            u[k] = u[k] + lit::<T>(0.5) * d;
        }
        if change <= opts.picard_switch * data_scale {
            break;
        }
    }

    let energy = |v: &[T]| {
        space.integrate_elementwise(v, |_, g| (g[0] * g[0] + g[1] * g[1] + eps * eps).powf(p / lit(2.0))) / p
    };
    let mut e0 = energy(&u);
    for _ in 0..opts.newton_max {
        stats.newton += 1;
        let r = p_laplacian_residual(space, &u, p, eps);
        let jac = assemble_linearized(space, &u, params, eps).restrict(&keep);
        let rhs: Vec<T> = keep.iter().map(|&k| -r[k]).collect();
        let delta = jac.cholesky()?.solve(&rhs);
        let slope: T = rhs.iter().zip(&delta).map(|(a, b)| -*a * *b).sum();
        let mut step = T::one();
        let mut trial = u.clone();
        let mut accepted = false;
        for _ in 0..40 {
            for (&k, &d) in keep.iter().zip(&delta) {
                trial[k] = u[k] + step * d;
            }
            let e1 = energy(&trial);
            if e1 <= e0 + lit::<T>(1e-4) * step * slope || step < lit(1e-10) {
                e0 = e1;
                accepted = true;
                break;
            }
            step = step * lit(0.5);
        }
        let size = delta.iter().fold(T::zero(), |m, d| m.max(d.abs())) / data_scale;
        stats.update = size.to_f64_lossy();
        if !accepted {
            return Err(Error::ConeSolveError(format!("line search stalled at update {size}")));
        }
        u = trial;
        if size <= opts.tol {
            return Ok(field(u, stats));
        }
        // the energy is flat to rounding once the update is tiny
        if step < T::one() && size <= opts.tol.sqrt() * lit(1e-2) {
            return Ok(field(u, stats));
        }
    }
    Err(Error::ConeSolveError(format!(
        "Newton did not converge in {} steps (update {:.3e})",
        opts.newton_max, stats.update
    )))
}

/// Solves `K_II u_I = -K_IB u_B` in place.
fn dirichlet_solve<T: Real>(k: &crate::linalg::SparseSym<T>, keep: &[usize], u: &mut [T]) -> Result<()> {
    let mut lifted = u.to_vec();
    for &i in keep {
        lifted[i] = T::zero();
    }
    let ku = k.matvec(&lifted);
    let rhs: Vec<T> = keep.iter().map(|&i| -ku[i]).collect();
    let x = k.restrict(keep).cholesky()?.solve(&rhs);
    for (&i, &v) in keep.iter().zip(&x) {
        u[i] = v;
    }
    Ok(())
}
