//! Checks of the pointwise constructions and inequalities that the exponent
//! theory rests on: sub/supersolution pairs, the monotone-flux vector
//! inequality, the energy identity and bounds, and operator homogeneity.
//!
//! Every check produces a [`CheckReport`]; [`run_suite`] collects them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigen::{Eigenpair, Profile};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_weighted, eigen_residual_vector, evaluate_residual, linearized_coefficients, solve_nonlinear, P1Space,
    SurfaceMesh,
};
use crate::geometry::{Branch, PParams, SphericalDomain};
use crate::ode::{solve_beta, ColatGrid};
use crate::scalar::{lit, Real};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// The statement being checked, in words.
    pub anchor: String,
    pub passed: bool,
    /// Smallest margin by which the checked inequality held, normalized by
    /// its natural scale; negative when violated.
    pub worst_slack: f64,
    pub samples: usize,
    pub violations: usize,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            passed: true,
            worst_slack: f64::INFINITY,
            samples: 0,
            violations: 0,
            detail: String::new(),
        }
    }

    /// Records one sample with normalized slack `s`, violating when `s < -tol`.
    fn record(&mut self, s: f64, tol: f64) {
        self.samples += 1;
        if s.is_nan() || s < self.worst_slack {
            self.worst_slack = s;
        }
        if s.is_nan() || s < -tol {
            self.violations += 1;
            self.passed = false;
        }
    }

    /// One line: status, name, worst slack, anchor.
    pub fn line(&self) -> String {
        format!(
            "{} {:<22} worst_slack={:+.3e} samples={} violations={} | {}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst_slack,
            self.samples,
            self.violations,
            self.anchor,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

/// `δ₁ = min ω'/ω` over samples where `ω > 0`.
pub fn delta_one<T: Real>(omega: &[T], omega_prime: &[T]) -> Result<T> {
    if omega.len() != omega_prime.len() {
        return Err(Error::InvalidParams("profiles have different lengths".into()));
    }
    let mut delta = T::infinity();
    for (i, (&w, &v)) in omega.iter().zip(omega_prime).enumerate() {
        if w > T::zero() {
            if !(v > T::zero()) {
                return Err(Error::PositivityError { node: i, value: v.to_f64_lossy() });
            }
            delta = delta.min(v / w);
        }
    }
    if !delta.is_finite() {
        return Err(Error::InvalidParams("profile has no positive samples".into()));
    }
    Ok(delta)
}

/// Rescales `omega_prime` so that `ω' ≤ ω` with equality of the supremum of
/// the ratio, the normalization in which the two graphs touch.
pub fn touching_scale<T: Real>(omega: &[T], omega_prime: &[T]) -> Result<Vec<T>> {
    let top = T::one() / delta_one(omega_prime, omega)?;
    Ok(omega_prime.iter().map(|&v| v / top).collect())
}

/// `φ_t = max(ω', tω)` and `ψ_t = min((t/δ₁)ω', ω)` for `t ∈ (δ₁, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubSuperPair<T> {
    pub t: T,
    pub delta1: T,
    /// `(t - δ₁)/(1 - δ₁)`.
    pub theta_t: T,
    pub phi: Vec<T>,
    pub psi: Vec<T>,
}

impl<T: Real> SubSuperPair<T> {
    /// Separable lifts `r^{-β}φ_t` and `r^{-β}ψ_t` at radius `r`.
    pub fn lift(&self, beta: T, r: T) -> (Vec<T>, Vec<T>) {
        let s = r.powf(-beta);
        (
            self.phi.iter().map(|&v| s * v).collect(),
            self.psi.iter().map(|&v| s * v).collect(),
        )
    }
}

/// Builds the pair of nodal profiles. `omega_prime ≤ omega` is expected
/// (see [`touching_scale`]).
pub fn build_sub_super<T: Real>(omega: &[T], omega_prime: &[T], t: T) -> Result<SubSuperPair<T>> {
    let delta1 = delta_one(omega, omega_prime)?;
    if !(t > delta1 && t < T::one()) {
        return Err(Error::RangeError {
            value: t.to_f64_lossy(),
            lo: delta1.to_f64_lossy(),
            hi: 1.0,
        });
    }
    let phi = omega.iter().zip(omega_prime).map(|(&w, &v)| v.max(t * w)).collect();
    let psi = omega
        .iter()
        .zip(omega_prime)
        .map(|(&w, &v)| (t / delta1 * v).min(w))
        .collect();
    Ok(SubSuperPair {
        t,
        delta1,
        theta_t: (t - delta1) / (T::one() - delta1),
        phi,
        psi,
    })
}

/// `φ_t ≤ θ_t ω + (1-θ_t) ω' ≤ ψ_t` at every sample, up to rounding.
pub fn convexity_bound_check<T: Real>(pair: &SubSuperPair<T>, omega: &[T], omega_prime: &[T]) -> CheckReport {
    let mut rep = CheckReport::new("convexity-bound", "max/min pair brackets the convex combination");
    let th = pair.theta_t;
    for i in 0..omega.len() {
        let mid = th * omega[i] + (T::one() - th) * omega_prime[i];
        let scale = omega[i].abs().max(T::min_positive_value()).to_f64_lossy();
        let rounding = 8.0 * T::epsilon().to_f64_lossy();
        rep.record((mid - pair.phi[i]).to_f64_lossy() / scale, rounding);
        rep.record((pair.psi[i] - mid).to_f64_lossy() / scale, rounding);
    }
    rep
}

/// Which one-sided inequality a field should satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    Sub,
    Super,
}

/// Result of pairing the weak residual with nonnegative hat functions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignReport {
    pub report: CheckReport,
    /// Worst normalized residual on the node (`None` when all nodes pass).
    pub worst_node: Option<usize>,
    /// Sum of residual pairings over excluded nodes, normalized like the slack.
    pub excluded_mass: f64,
    pub excluded_nodes: usize,
}

/// Pairs the weak residual `∫ w∇η·∇φ_i - (p-1)β(β-β0)∫ w η φ_i` with every
/// interior hat function. `Sub` requires pairings `≤ tol`, `Super` requires
/// `≥ -tol`, both relative to the largest per-node scale of the two terms.
/// Nodes flagged in `exclude` are skipped and their total reported apart.
pub fn subsolution_sign_check<T: Real>(
    space: &P1Space<T>,
    params: &PParams<T>,
    beta: T,
    values: &[T],
    kind: SolutionKind,
    exclude: Option<&[bool]>,
    tol: T,
) -> Result<SignReport> {
    if values.len() != space.n_nodes() {
        return Err(Error::MeshError("field does not match the mesh".into()));
    }
    let r = eigen_residual_vector(space, params, beta, values, T::zero());
    let scale = term_scale(space, params, beta, values);
    let norm = scale.iter().copied().fold(T::zero(), T::max);
    let sign = match kind {
        SolutionKind::Sub => -T::one(),
        SolutionKind::Super => T::one(),
    };
    let mut rep = CheckReport::new(
        match kind {
            SolutionKind::Sub => "subsolution-sign",
            SolutionKind::Super => "supersolution-sign",
        },
        "weak residual paired with nonnegative hat functions",
    );
    let mut worst_node = None;
    let mut worst = f64::INFINITY;
    let mut excluded_mass = T::zero();
    let mut excluded_nodes = 0;
    for i in space.interior_nodes() {
        let s = sign * r[i] / norm;
        if exclude.is_some_and(|m| m[i]) {
            excluded_mass = excluded_mass + r[i] / norm;
            excluded_nodes += 1;
            continue;
        }
        let s = s.to_f64_lossy();
        if s < worst {
            worst = s;
            worst_node = Some(i);
        }
        rep.record(s, tol.to_f64_lossy());
    }
    Ok(SignReport {
        worst_node: if rep.passed { None } else { worst_node },
        report: rep,
        excluded_mass: excluded_mass.to_f64_lossy(),
        excluded_nodes,
    })
}

/// Per-node magnitude of the two residual terms.
fn term_scale<T: Real>(space: &P1Space<T>, params: &PParams<T>, beta: T, values: &[T]) -> Vec<T> {
    let lambda = params.eigen_factor(beta).abs();
    let mut s = vec![T::zero(); space.n_nodes()];
    for e in space.elements() {
        let m = e.mean(values);
        let g = e.gradient(values);
        let gg = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        let q = beta * beta * m * m + gg;
        if q == T::zero() {
            continue;
        }
        let w = q.powf(params.weight_exponent());
        for (a, &i) in e.local().iter().enumerate() {
            let ga = &e.grads[a];
            let gn = (ga[0] * ga[0] + ga[1] * ga[1] + ga[2] * ga[2]).sqrt();
            let mass: T = e.local().iter().enumerate().map(|(b, &j)| e.mass_factor(a, b) * values[j].abs()).sum();
            s[i] = s[i] + w * e.measure * (gg.sqrt() * gn + lambda * mass);
        }
    }
    s
}

/// Nodes of every element on which `a - b` changes sign: a one-element band
/// around the interface where `max(a, b)` switches branch.
pub fn switch_band<T: Real>(space: &P1Space<T>, a: &[T], b: &[T]) -> Vec<bool> {
    let mut band = vec![false; space.n_nodes()];
    for e in space.elements() {
        let pos = e.local().iter().any(|&i| a[i] > b[i]);
        let neg = e.local().iter().any(|&i| a[i] < b[i]);
        if pos && neg {
            for &i in e.local() {
                band[i] = true;
            }
        }
    }
    band
}

/// Closed form of the operator applied to `η = w^θ` at the exponent `θβ'`,
/// where `w` solves the eigenvalue problem with exponent `β'`:
///
/// `-(p-1) θ^{p-1} (θ-1) w^{(θ-1)(p-1)-1} (β'²w² + |∇w|²)^{p/2}`.
///
/// It is nonpositive for `θ ≥ 1`, so `w^θ` is a subsolution.
pub fn power_subsolution_residual<T: Real>(params: &PParams<T>, beta_prime: T, theta: T, w: T, grad_sq: T) -> T {
    let p = params.p();
    let one = T::one();
    let q = beta_prime * beta_prime * w * w + grad_sq;
    -(p - one) * theta.powf(p - one) * (theta - one) * w.powf((theta - one) * (p - one) - one) * q.powf(p / lit(2.0))
}

/// Evaluates [`power_subsolution_residual`] at the Gauss points of a profile
/// and checks its sign.
pub fn power_subsolution_check<T: Real>(params: &PParams<T>, beta_prime: T, profile: &ColatGrid<T>, theta: T) -> CheckReport {
    let mut rep = CheckReport::new("power-subsolution", "powers of an eigenfunction are subsolutions");
    let nodes = profile.nodes();
    let g = lit::<T>(0.6).sqrt();
    let half = lit::<T>(0.5);
    let sup = profile.sup_norm();
    let scale = power_subsolution_residual(params, beta_prime, theta, sup, T::zero()).abs().max(T::min_positive_value());
    for w in nodes.windows(2) {
        let (mid, rad) = ((w[0] + w[1]) * half, (w[1] - w[0]) * half);
        for x in [-g, T::zero(), g] {
            let (v, d) = profile.eval_with_derivative(mid + rad * x);
            if !(v > T::zero()) {
                continue;
            }
            let r = power_subsolution_residual(params, beta_prime, theta, v, d * d);
            rep.record((-r / scale).to_f64_lossy(), 0.0);
        }
    }
    rep
}

/// `⟨F(B) - F(A), B - A⟩ ≥ (p-1)|B-A|²(γ+1+|B|²+|A|²)^{(p-2)/2}` with
/// `F(X) = (γ+|X|²)^{(p-2)/2} X`, returned as `(lhs, rhs, rounding)`.
pub fn vector_inequality_sides(p: f64, gamma: f64, a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    let e = (p - 2.0) / 2.0;
    let fa = if gamma + na > 0.0 { (gamma + na).powf(e) } else { 0.0 };
    let fb = if gamma + nb > 0.0 { (gamma + nb).powf(e) } else { 0.0 };
    let mut lhs = 0.0;
    let mut dd = 0.0;
    let mut flux = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = y - x;
        lhs += (fb * y - fa * x) * d;
        dd += d * d;
        flux += (fb * y).abs() + (fa * x).abs();
    }
    let rhs = (p - 1.0) * dd * (gamma + 1.0 + na + nb).powf(e);
    let rounding = 64.0 * f64::EPSILON * (flux * dd.sqrt() + rhs);
    (lhs, rhs, rounding)
}

/// Randomized check of the vector inequality for `1 < p < 2` in dimension
/// `N - 1`; magnitudes of `γ`, `A`, `B` span several decades.
pub fn vector_inequality_check(p: f64, dim: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidParams(format!("vector inequality needs 1 < p < 2, got {p}")));
    }
    if trials == 0 || dim < 2 {
        return Err(Error::InvalidParams("need at least one trial and dim >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CheckReport::new("vector-inequality", "monotone flux lower bound for 1 < p < 2");
    rep.detail = format!("p={p} N={dim}");
    let k = dim - 1;
    for _ in 0..trials {
        let gamma = if rng.gen_bool(0.2) { 0.0 } else { 10f64.powf(rng.gen_range(-4.0..3.0)) };
        let sa = 10f64.powf(rng.gen_range(-3.0..2.0));
        let sb = 10f64.powf(rng.gen_range(-3.0..2.0));
        let a: Vec<f64> = (0..k).map(|_| sa * rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = if rng.gen_bool(0.1) {
            // nearly coincident vectors stress the cancellation in the left side
            a.iter().map(|x| x + 1e-6 * sa * rng.gen_range(-1.0..1.0)).collect()
        } else {
            (0..k).map(|_| sb * rng.gen_range(-1.0..1.0)).collect()
        };
        let (lhs, rhs, rounding) = vector_inequality_sides(p, gamma, &a, &b);
        let scale = lhs.abs().max(rhs).max(f64::MIN_POSITIVE);
        rep.record((lhs - rhs + rounding) / scale, 0.0);
    }
    Ok(rep)
}

/// Element-by-element check of the ellipticity bounds of the linearized
/// p-Laplacian, `(min(p,2)-1)|g|^{p-2}|ξ|² ≤ ξᵀBξ ≤ (max(p,2)-1)|g|^{p-2}|ξ|²`,
/// with `g` the element gradient of `values` and random `ξ`.
pub fn ellipticity_check<T: Real>(space: &P1Space<T>, p: T, values: &[T], seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CheckReport::new("ellipticity", "linearized operator is uniformly elliptic");
    let lo = p.min(lit(2.0)) - T::one();
    let hi = p.max(lit(2.0)) - T::one();
    let rel = lit::<T>(1e3) * T::epsilon();
    for e in space.elements() {
        let g = e.gradient(values);
        let gg = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        if !(gg > T::zero()) {
            continue;
        }
        let xi: [T; 3] = std::array::from_fn(|_| lit(rng.gen_range(-1.0..1.0)));
        let b = linearized_coefficients(p, &g, T::zero());
        let mut form = T::zero();
        for r in 0..3 {
            for c in 0..3 {
                form = form + xi[r] * b[r][c] * xi[c];
            }
        }
        let scale = gg.powf((p - lit(2.0)) / lit(2.0)) * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
        let tol = (rel * hi).to_f64_lossy();
        rep.record(((form - lo * scale) / scale).to_f64_lossy(), tol);
        rep.record(((hi * scale - form) / scale).to_f64_lossy(), tol);
    }
    rep
}

/// Energy identity and bound of an eigenpair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `∫ w|∇ω|²` with `w = (β²ω² + |∇ω|² + ε²)^{(p-2)/2}`.
    pub gradient_energy: f64,
    /// `(p-1)β(β-β0) ∫ w ω²`.
    pub mass_energy: f64,
    /// `|gradient - mass| / gradient`.
    pub identity_defect: f64,
    /// `∫ (β²ω² + |∇ω|²)^{p/2}`.
    pub bound_lhs: f64,
    /// The constant times `∫|ω|^p`.
    pub bound_rhs: f64,
    pub bound_constant: f64,
    pub identity: CheckReport,
    pub bound: CheckReport,
}

/// Constant of the energy bound: `(β(pβ-(p-1)β0))^{p/2}` for `p ≥ 2`,
/// `|β|^{p-2} β(pβ-(p-1)β0)` for `p < 2`.
pub fn energy_bound_constant<T: Real>(params: &PParams<T>, beta: T) -> T {
    let p = params.p();
    let k = beta * (p * beta - (p - T::one()) * params.beta0());
    if p >= lit(2.0) {
        k.max(T::zero()).powf(p / lit(2.0))
    } else {
        beta.abs().powf(p - lit(2.0)) * k
    }
}

/// Multiplying the equation by `ω` gives `∫ w|∇ω|² = (p-1)β(β-β0)∫ wω²`.
/// For meshes the discrete weighted forms of the solver are used with its
/// regularization `eps`, so the identity holds to the solve tolerance; for
/// profiles the integrals use Gauss quadrature of the interpolant. `tol`
/// bounds the relative identity defect.
pub fn energy_identity_check<T: Real>(eigenpair: &Eigenpair<T>, params: &PParams<T>, eps: T, tol: T) -> Result<EnergyReport> {
    let beta = eigenpair.beta;
    let p = params.p();
    let dim = params.dim();
    let factor = params.eigen_factor(beta);
    let (grad, mass, lhs, lp) = match &eigenpair.omega {
        Profile::Mesh(f) => {
            let space = f.space();
            let v = f.values();
            let forms = assemble_weighted(space, params, beta, v, eps)?;
            let lhs = space.integrate_elementwise(v, |m, g| {
                (beta * beta * m * m + g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).powf(p / lit(2.0))
            });
            let lp = space.integrate_elementwise(v, |m, _| m.abs().powf(p));
            (forms.stiffness.bilinear(v, v), forms.mass.bilinear(v, v), lhs, lp)
        }
        Profile::Colat(g) => {
            let e = params.weight_exponent();
            let w = |v: T, d: T| (beta * beta * v * v + d * d + eps * eps).powf(e);
            let grad = g.integrate(dim, |_, v, d| w(v, d) * d * d);
            let mass = g.integrate(dim, |_, v, d| w(v, d) * v * v);
            let lhs = g.integrate(dim, |_, v, d| (beta * beta * v * v + d * d).powf(p / lit(2.0)));
            let lp = g.integrate(dim, |_, v, _| v.abs().powf(p));
            (grad, mass, lhs, lp)
        }
    };
    let defect = (grad - factor * mass).abs() / grad;
    let constant = energy_bound_constant(params, beta);
    let rhs = constant * lp;
    let mut identity = CheckReport::new("energy-identity", "testing the equation with the eigenfunction");
    identity.record((tol - defect).to_f64_lossy() / tol.to_f64_lossy(), 0.0);
    identity.detail = format!("defect={:.3e} tol={:.1e}", defect.to_f64_lossy(), tol.to_f64_lossy());
    let mut bound = CheckReport::new("energy-bound", "Hölder bound on the full gradient energy");
    // equality holds for p = 2
    bound.record(((rhs - lhs) / rhs).to_f64_lossy(), 1e-9);
    bound.detail = format!("p={} beta={:.6}", p.to_f64_lossy(), beta.to_f64_lossy());
    Ok(EnergyReport {
        gradient_energy: grad.to_f64_lossy(),
        mass_energy: (factor * mass).to_f64_lossy(),
        identity_defect: defect.to_f64_lossy(),
        bound_lhs: lhs.to_f64_lossy(),
        bound_rhs: rhs.to_f64_lossy(),
        bound_constant: constant.to_f64_lossy(),
        identity,
        bound,
    })
}

/// `residual(λω, β) = λ^{p-1} residual(ω, β)` to relative `tol`.
pub fn homogeneity_check<T: Real>(
    space: &P1Space<T>,
    params: &PParams<T>,
    beta: T,
    omega: &[T],
    lambda: T,
    tol: T,
) -> Result<CheckReport> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
    }
    let r1 = evaluate_residual(space, params, beta, omega)?;
    let scaled: Vec<T> = omega.iter().map(|&v| lambda * v).collect();
    let r2 = evaluate_residual(space, params, beta, &scaled)?;
    let expected = lambda.powf(params.p() - T::one()) * r1;
    let err = (r2 - expected).abs() / expected.abs().max(T::min_positive_value());
    let mut rep = CheckReport::new("homogeneity", "the operator is homogeneous of degree p-1");
    rep.record(((tol - err) / tol).to_f64_lossy(), 0.0);
    rep.detail = format!("lambda={:.4} rel_err={:.2e}", lambda.to_f64_lossy(), err.to_f64_lossy());
    Ok(rep)
}

/// `‖ω‖_∞ / ‖ω‖_{L^p}` of an eigenfunction.
pub fn sup_lp_ratio<T: Real>(eigenpair: &Eigenpair<T>, params: &PParams<T>) -> T {
    eigenpair.omega.sup_norm() / eigenpair.omega.lp_norm(params.dim(), params.p())
}

/// The sup/L^p ratio of the meridian finite element eigenfunction of a cap
/// across refinements varies by less than `max_variation`.
pub fn sup_bound_trend<T: Real>(
    params: &PParams<T>,
    alpha: T,
    intervals: &[usize],
    max_variation: T,
) -> Result<(CheckReport, Vec<T>)> {
    let mut ratios = Vec::new();
    for &n in intervals {
        let space = Arc::new(crate::fem::IntervalMesh::uniform(alpha, n, params.dim())?.space()?);
        let e = solve_nonlinear(&space, params, Branch::Singular, lit(1e-9))?;
        ratios.push(sup_lp_ratio(&e, params));
    }
    let lo = ratios.iter().copied().fold(T::infinity(), T::min);
    let hi = ratios.iter().copied().fold(T::zero(), T::max);
    let variation = (hi - lo) / lo;
    let mut rep = CheckReport::new("sup-bound-trend", "sup norm controlled by the L^p norm uniformly in h");
    rep.record(((max_variation - variation) / max_variation).to_f64_lossy(), 0.0);
    rep.detail = format!("variation={:.3e}", variation.to_f64_lossy());
    Ok((rep, ratios))
}

/// Random nested arcs and caps `S₁ ⊂ S₂`: the exponent magnitude of the
/// smaller domain is at least that of the larger one, on both branches.
pub fn nested_monotonicity_check(trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CheckReport::new("nested-monotonicity", "exponents decrease in magnitude as the domain grows");
    for _ in 0..trials {
        let dim = if rng.gen_bool(0.5) { 2 } else { 3 };
        let p = rng.gen_range(1.3..4.0);
        let branch = if rng.gen_bool(0.5) { Branch::Singular } else { Branch::Regular };
        let big = rng.gen_range(0.4..2.8);
        let small = big * rng.gen_range(0.3..0.95);
        let params = PParams::new(p, dim)?;
        let make = |a: f64| if dim == 2 { SphericalDomain::arc(a) } else { SphericalDomain::cap(a, dim) };
        let b1 = solve_beta(&params, &make(small)?, branch, 1e-10)?.beta;
        let b2 = solve_beta(&params, &make(big)?, branch, 1e-10)?.beta;
        rep.record((b1.abs() - b2.abs()) / b1.abs().max(1.0), tol);
    }
    Ok(rep)
}

/// Suite configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Vector inequality trials per `(p, N)`.
    pub trials: usize,
    /// Run only the named check.
    pub only: Option<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 1, trials: 10_000, only: None }
    }
}

/// Names accepted by [`SuiteOptions::only`].
pub const SUITE_CHECKS: [&str; 9] = [
    "vector-inequality",
    "ellipticity",
    "convexity-bound",
    "power-subsolution",
    "homogeneity",
    "energy-identity",
    "energy-bound",
    "sup-bound-trend",
    "nested-monotonicity",
];

/// Collected reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&c.line());
            s.push('\n');
        }
        s
    }
}

/// Runs every check with deterministic randomness derived from `seed`.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    if let Some(name) = &opts.only {
        if !SUITE_CHECKS.contains(&name.as_str()) {
            return Err(Error::InvalidParams(format!(
                "unknown check `{name}`; expected one of {}",
                SUITE_CHECKS.join(", ")
            )));
        }
    }
    let wanted = |n: &str| opts.only.as_deref().is_none_or(|o| o == n);
    let mut checks = Vec::new();
    let mut seeds = ChaCha8Rng::seed_from_u64(opts.seed);

    if wanted("vector-inequality") {
        for p in [1.1, 1.5, 1.9] {
            for dim in [2, 3] {
                checks.push(vector_inequality_check(p, dim, opts.trials, seeds.gen())?);
            }
        }
    } else {
        for _ in 0..6 {
            let _: u64 = seeds.gen();
        }
    }

    let cap = Arc::new(SurfaceMesh::cap(lit::<f64>(1.2), 8)?.space()?);
    let cap_field: Vec<f64> = cap
        .coords()
        .iter()
        .zip(cap.boundary())
        .map(|(x, &b)| if b { 0.0 } else { (x[2] - 1.2f64.cos()) * (1.0 + 0.5 * x[0] + 0.2 * x[1]) })
        .collect();
    let ell_seed: u64 = seeds.gen();
    if wanted("ellipticity") {
        for p in [1.2, 1.5, 2.5, 4.0] {
            let mut rep = ellipticity_check(&cap, p, &cap_field, ell_seed);
            rep.detail = format!("p={p}");
            checks.push(rep);
        }
    }

    let conv_seed: u64 = seeds.gen();
    if wanted("convexity-bound") {
        checks.push(random_convexity_trials(1000, conv_seed)?);
    }

    let arc = SphericalDomain::arc(std::f64::consts::FRAC_PI_2)?;
    if wanted("power-subsolution") {
        for p in [1.5, 2.0, 3.0] {
            let params = PParams::new(p, 2)?;
            let e = solve_beta(&params, &arc, Branch::Singular, 1e-11)?;
            let mut rep = power_subsolution_check(&params, e.beta, e.omega.as_colat().expect("profile"), 1.5);
            rep.detail = format!("p={p} theta=1.5");
            checks.push(rep);
        }
    }

    let hom_seed: u64 = seeds.gen();
    if wanted("homogeneity") {
        let mut rng = ChaCha8Rng::seed_from_u64(hom_seed);
        for _ in 0..5 {
            let p = rng.gen_range(1.2..4.0);
            let lambda = rng.gen_range(0.1..10.0);
            let params = PParams::new(p, 3)?;
            checks.push(homogeneity_check(&cap, &params, 1.3, &cap_field, lambda, 1e-10)?);
        }
    }

    if wanted("energy-identity") || wanted("energy-bound") {
        for p in [1.5, 2.5, 3.0] {
            let params = PParams::new(p, 3)?;
            let tol = 1e-10;
            let space = Arc::new(crate::fem::IntervalMesh::uniform(1.2, 400, 3)?.space()?);
            let sol = crate::fem::solve_nonlinear_with(
                &space,
                &params,
                Branch::Singular,
                &crate::fem::NonlinearOptions::with_tol(tol),
                None,
            )?;
            let mut rep = energy_identity_check(&sol.eigenpair, &params, sol.eps, 10.0 * tol)?;
            rep.identity.detail = format!("p={p} {}", rep.identity.detail);
            if wanted("energy-identity") {
                checks.push(rep.identity);
            }
            if wanted("energy-bound") {
                checks.push(rep.bound);
            }
        }
    }

    if wanted("sup-bound-trend") {
        let params = PParams::new(2.5, 3)?;
        checks.push(sup_bound_trend(&params, 1.2, &[100, 200, 400], 0.1)?.0);
    }

    let nest_seed: u64 = seeds.gen();
    if wanted("nested-monotonicity") {
        checks.push(nested_monotonicity_check(24, nest_seed, 1e-8)?);
    }

    Ok(SuiteReport { seed: opts.seed, checks })
}

/// Random positive profiles `ω ≥ ω'` and random `t ∈ (δ₁, 1)`.
fn random_convexity_trials(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = CheckReport::new("convexity-bound", "max/min pair brackets the convex combination");
    for _ in 0..trials {
        let n = rng.gen_range(2..40);
        let omega: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..10.0)).collect();
        let omega_prime: Vec<f64> = omega.iter().map(|w| w * rng.gen_range(0.05..1.0)).collect();
        let d = delta_one(&omega, &omega_prime)?;
        let t = d + (1.0 - d) * rng.gen_range(0.001..0.999);
        let pair = build_sub_super(&omega, &omega_prime, t)?;
        let rep = convexity_bound_check(&pair, &omega, &omega_prime);
        total.samples += rep.samples;
        total.violations += rep.violations;
        total.passed &= rep.passed;
        total.worst_slack = total.worst_slack.min(rep.worst_slack);
    }
    total.detail = format!("{trials} random profiles");
    Ok(total)
}
