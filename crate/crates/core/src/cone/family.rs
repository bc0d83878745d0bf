use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{solve_truncated, ConeField, ConeGrid, ConeOptions, Outer};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::verify::{build_sub_super, delta_one, touching_scale};

/// Cone solutions interpolating between the traces `ω'` (`τ = 0`) and `ω`
/// (`τ = 1`): `v_τ = a^{-β}(τω + (1-τ)ω')` on `r = a`, zero elsewhere on the
/// boundary.
#[derive(Clone, Debug)]
pub struct TauFamily<T> {
    pub grid: Arc<ConeGrid<T>>,
    pub taus: Vec<T>,
    pub fields: Vec<ConeField<T>>,
    pub beta: T,
    /// `min ω'/ω` over interior angles.
    pub delta1: T,
    /// Angle samples of `ω`, scaled to unit maximum.
    pub omega: Vec<T>,
    /// Angle samples of `ω'`, scaled so that `max ω'/ω = 1`.
    pub omega_prime: Vec<T>,
}

impl<T: Real> TauFamily<T> {
    /// Wraps precomputed fields, e.g. a synthetic control family.
    pub fn from_fields(
        grid: Arc<ConeGrid<T>>,
        taus: Vec<T>,
        fields: Vec<ConeField<T>>,
        beta: T,
        omega: Vec<T>,
        omega_prime: Vec<T>,
    ) -> Result<Self> {
        if taus.len() != fields.len() || taus.len() < 2 {
            return Err(Error::InvalidParams("need at least two tau values with one field each".into()));
        }
        let (w, v) = interior_pair(&grid, &omega, &omega_prime);
        let delta1 = delta_one(&w, &v)?;
        Ok(Self {
            grid,
            taus,
            fields,
            beta,
            delta1,
            omega,
            omega_prime,
        })
    }

    /// Index of the consecutive pair whose midpoint is closest to `tau`.
    pub fn pair_near(&self, tau: T) -> usize {
        (0..self.taus.len() - 1)
            .min_by(|&a, &b| {
                let da = ((self.taus[a] + self.taus[a + 1]) * lit(0.5) - tau).abs();
                let db = ((self.taus[b] + self.taus[b + 1]) * lit(0.5) - tau).abs();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0)
    }

    /// Finite-difference quotient `(v_{k+1} - v_k)/((τ_{k+1} - τ_k) v̄)` with
    /// `v̄` the pair average, at interior nodes where `v̄ > 0`.
    pub fn quotient(&self, k: usize) -> Vec<Option<T>> {
        let (lo, hi) = (&self.fields[k], &self.fields[k + 1]);
        let dt = self.taus[k + 1] - self.taus[k];
        let boundary = self.grid.space().boundary();
        lo.values()
            .iter()
            .zip(hi.values())
            .zip(boundary)
            .map(|((&a, &b), &bd)| {
                let mid = (a + b) * lit(0.5);
                (!bd && mid > T::zero()).then(|| (b - a) / (dt * mid))
            })
            .collect()
    }

    /// `(sup, inf)` of the quotient of pair `k` over interior nodes with
    /// `t ≤ r ≤ r_max`.
    pub fn shell_extrema(&self, k: usize, t: T, r_max: T) -> Option<(T, T)> {
        extrema(&self.grid, &self.quotient(k), t, r_max)
    }
}

fn extrema<T: Real>(grid: &ConeGrid<T>, q: &[Option<T>], t: T, r_max: T) -> Option<(T, T)> {
    let mut out: Option<(T, T)> = None;
    for j in 0..grid.n_rows() {
        let r = grid.radius(j);
        if r < t * (T::one() - T::epsilon().sqrt()) || r > r_max * (T::one() + T::epsilon().sqrt()) {
            continue;
        }
        for i in 0..grid.n_cols() {
            if let Some(v) = q[grid.index(j, i)] {
                out = Some(match out {
                    None => (v, v),
                    Some((m, n)) => (m.max(v), n.min(v)),
                });
            }
        }
    }
    out
}

fn interior_pair<T: Real>(grid: &ConeGrid<T>, omega: &[T], omega_prime: &[T]) -> (Vec<T>, Vec<T>) {
    (0..grid.n_cols())
        .filter(|&i| !grid.is_lateral(i))
        .map(|i| (omega[i], omega_prime[i]))
        .unzip()
}

/// Solves the family on `tau_grid` (sorted, containing 0 and 1) after
/// scaling `ω` to unit maximum and `ω'` to touch `ω` from below. Fields
/// must increase with `τ` at every node.
pub fn deformation_family<T: Real>(
    grid: &Arc<ConeGrid<T>>,
    beta: T,
    omega: &[T],
    omega_prime: &[T],
    tau_grid: &[T],
    opts: &ConeOptions<T>,
) -> Result<TauFamily<T>> {
    let cols = grid.n_cols();
    if omega.len() != cols || omega_prime.len() != cols {
        return Err(Error::InvalidParams("profiles must be sampled at the grid angles".into()));
    }
    if tau_grid.len() < 2
        || tau_grid[0] != T::zero()
        || tau_grid[tau_grid.len() - 1] != T::one()
        || tau_grid.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::InvalidParams("tau grid must increase from 0 to 1".into()));
    }
    let top = omega.iter().fold(T::zero(), |m, v| m.max(*v));
    let omega: Vec<T> = omega.iter().map(|&v| v / top).collect();
    let (w, v) = interior_pair(grid, &omega, omega_prime);
    let v = touching_scale(&w, &v)?;
    let mut prime = vec![T::zero(); cols];
    for (k, i) in (0..cols).filter(|&i| !grid.is_lateral(i)).enumerate() {
        prime[i] = v[k];
    }
    let scale = grid.cone().a().powf(-beta);
    let fields: Vec<ConeField<T>> = tau_grid
        .par_iter()
        .map(|&tau| {
            let data: Vec<T> = omega
                .iter()
                .zip(&prime)
                .map(|(&a, &b)| scale * (tau * a + (T::one() - tau) * b))
                .collect();
            solve_truncated(grid, &data, Outer::Zero, opts)
        })
        .collect::<Result<_>>()?;
    let family = TauFamily::from_fields(grid.clone(), tau_grid.to_vec(), fields, beta, omega, prime)?;
    let tol = opts.tol.sqrt() * scale;
    for k in 0..family.fields.len() - 1 {
        let (lo, hi) = (family.fields[k].values(), family.fields[k + 1].values());
        if let Some(n) = (0..lo.len()).find(|&n| hi[n] < lo[n] - tol) {
            return Err(Error::MonotonicityViolation {
                index: k + 1,
                detail: format!("node {n}: {} < {}", hi[n], lo[n]),
            });
        }
    }
    Ok(family)
}

/// Ordering `u_{ω'} ≤ v_φ ≤ v_τ ≤ v_ψ ≤ u_ω` of the separable lifts of the
/// sub/supersolution pair at `τ* = (1-δ₁)τ + δ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichReport<T> {
    pub tau: T,
    pub tau_star: T,
    /// Largest violation of the chain in units of `r^{-β}`.
    pub max_violation: T,
    pub h: T,
    /// Allowed violation `10 h²`.
    pub allowed: T,
    /// Radius up to which the chain is checked.
    pub r_max: T,
    pub nodes: usize,
    pub passed: bool,
}

/// Checks the ordering for the `k`-th member on `a ≤ r ≤ r_max`. The zero
/// trace on `r = b` pulls `v_τ` below the lifts near the outer sphere, so
/// `r_max` should stay well inside, e.g. `√(ab)`.
pub fn sandwich_check<T: Real>(family: &TauFamily<T>, k: usize, r_max: T) -> Result<SandwichReport<T>> {
    let grid = &family.grid;
    let tau = family.taus[k];
    let d1 = family.delta1;
    let tau_star = (T::one() - d1) * tau + d1;
    let (phi, psi) = if tau_star >= T::one() {
        (family.omega.clone(), family.omega.clone())
    } else if tau_star <= d1 {
        (family.omega_prime.clone(), family.omega_prime.clone())
    } else {
        let (w, v) = interior_pair(grid, &family.omega, &family.omega_prime);
        let pair = build_sub_super(&w, &v, tau_star)?;
        let mut phi = vec![T::zero(); grid.n_cols()];
        let mut psi = vec![T::zero(); grid.n_cols()];
        for (n, i) in (0..grid.n_cols()).filter(|&i| !grid.is_lateral(i)).enumerate() {
            phi[i] = pair.phi[n];
            psi[i] = pair.psi[n];
        }
        (phi, psi)
    };
    let field = &family.fields[k];
    let mut worst = T::zero();
    let mut nodes = 0;
    for j in 0..grid.n_rows() {
        let r = grid.radius(j);
        if r > r_max * (T::one() + T::epsilon().sqrt()) {
            continue;
        }
        let lift = r.powf(family.beta);
        for i in 0..grid.n_cols() {
            nodes += 1;
            let v = field.at(j, i) * lift;
            let chain = [family.omega_prime[i], phi[i], v, psi[i], family.omega[i]];
            for w in chain.windows(2) {
                worst = worst.max(w[0] - w[1]);
            }
        }
    }
    let h = grid.h();
    let allowed = lit::<T>(10.0) * h * h;
    Ok(SandwichReport {
        tau,
        tau_star,
        max_violation: worst,
        h,
        allowed,
        r_max,
        nodes,
        passed: worst <= allowed,
    })
}

/// The bounds `0 ≤ (v_{τ'} - v_τ)/(τ' - τ) ≤ (1/δ₁ - 1) v_{τ'}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzReport<T> {
    pub pairs: usize,
    /// Smallest margin of the lower bound, relative to the row maximum of `v_{τ'}`.
    pub lower_slack: T,
    pub upper_slack: T,
    pub violations: usize,
    pub passed: bool,
}

/// Checks both bounds at every node for every consecutive pair. Slacks are
/// taken at interior nodes, normalized by the largest value of `v_{τ'}` on
/// the same radius; `tol` bounds the admissible negative slack.
pub fn tau_lipschitz_check<T: Real>(family: &TauFamily<T>, tol: T) -> LipschitzReport<T> {
    let grid = &family.grid;
    let factor = T::one() / family.delta1 - T::one();
    let mut lower_slack = T::infinity();
    let mut upper_slack = T::infinity();
    let mut violations = 0;
    for k in 0..family.fields.len() - 1 {
        let dt = family.taus[k + 1] - family.taus[k];
        let (lo, hi) = (&family.fields[k], &family.fields[k + 1]);
        for j in 0..grid.n_rows() {
            let row = (0..grid.n_cols()).fold(T::zero(), |m, i| m.max(hi.at(j, i).abs()));
            if row == T::zero() {
                continue;
            }
            for i in 0..grid.n_cols() {
                if grid.space().is_boundary(grid.index(j, i)) {
                    continue;
                }
                let d = (hi.at(j, i) - lo.at(j, i)) / dt;
                let l = d / row;
                let u = (factor * hi.at(j, i) - d) / row;
                if l < -tol || u < -tol {
                    violations += 1;
                }
                lower_slack = lower_slack.min(l);
                upper_slack = upper_slack.min(u);
            }
        }
    }
    LipschitzReport {
        pairs: family.fields.len() - 1,
        lower_slack,
        upper_slack,
        violations,
        passed: violations == 0,
    }
}

/// Oscillation of the quotient beyond one shell radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Shell<T> {
    pub t: T,
    pub sup: T,
    pub inf: T,
    pub osc: T,
}

/// Geometric decay of the quotient oscillation across radius shells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport<T> {
    pub pair: usize,
    /// Empirical two-sided Harnack constant of the quotient at the incenter ray.
    pub c_hat: T,
    /// The same constant with the reference point moved toward the boundary.
    pub c_hat_offcenter: Option<T>,
    /// Smallest ratio at which the shifted quotients `Q - m(t)` and
    /// `M(t) - Q` obey the same comparison on every shell. `None` when no
    /// admissible ratio resolves it above the `h²` accuracy of `Q`.
    pub c_hat_shifted: Option<T>,
    pub shells: Vec<Shell<T>>,
    /// Outer radius of every shell region, `b/ĉ`.
    pub r_max: T,
    /// Fitted ratio `osc(ĉt)/osc(t)`.
    pub theta_fit: T,
    /// `(ĉ²-1)/(ĉ²+1)`.
    pub bound: T,
    pub monotone: bool,
    pub passed: bool,
}

/// Estimates `ĉ`, builds shells `t_j = ĉ^j a` with `t_j ≤ b/ĉ²`, and fits the
/// decay rate of `osc(t_j)` over `t_j ≤ r ≤ b/ĉ`. A family constant in `τ`
/// has `θ_fit = 0`.
pub fn contraction_check<T: Real>(family: &TauFamily<T>, k: usize) -> Result<ContractionReport<T>> {
    let grid = &family.grid;
    let cone = grid.cone();
    let (a, b) = (cone.a(), cone.b());
    let q = family.quotient(k);
    let scale = q.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    let flat = scale <= lit::<T>(1e-12);
    let ratio = |j: usize| grid.radius(j) / a;
    let i0 = grid.nearest_angle(cone.incenter_angle());
    let c_hat = if flat {
        lit(2.0)
    } else {
        harnack_rows(grid, &q, i0, None).map(ratio).ok_or_else(|| {
            Error::ConfigError(format!(
                "no shell ratio c with c^3 <= b/a = {} satisfies the Harnack comparison; enlarge the radius ratio",
                (b / a).to_f64_lossy()
            ))
        })?
    };
    let offcenter = if cone.is_cap() { cone.alpha() * lit(0.5) } else { cone.alpha() * lit(0.25) };
    let (c_hat_offcenter, c_hat_shifted) = if flat {
        (None, None)
    } else {
        let h = grid.h();
        (
            harnack_rows(grid, &q, grid.nearest_angle(offcenter), None).map(ratio),
            harnack_rows(grid, &q, i0, Some(h * h * scale)).map(ratio),
        )
    };
    if b / a < c_hat * c_hat {
        return Err(Error::ConfigError(format!(
            "b/a = {} is below c_hat^2 = {}; enlarge the radius ratio",
            (b / a).to_f64_lossy(),
            (c_hat * c_hat).to_f64_lossy()
        )));
    }
    let r_max = b / c_hat;
    let mut shells = Vec::new();
    let mut t = c_hat * a;
    while t <= b / (c_hat * c_hat) * (T::one() + T::epsilon().sqrt()) {
        let (sup, inf) = extrema(grid, &q, t, r_max).unwrap_or((T::zero(), T::zero()));
        shells.push(Shell { t, sup, inf, osc: sup - inf });
        t = t * c_hat;
    }
    let bound = (c_hat * c_hat - T::one()) / (c_hat * c_hat + T::one());
    let first = shells.first().map(|s| s.osc).unwrap_or(T::zero());
    let monotone = shells
        .windows(2)
        .all(|w| w[1].osc <= w[0].osc + lit::<T>(1e-9) * first.max(T::min_positive_value()));
    if !monotone {
        return Err(Error::ContractionFailure(format!(
            "oscillation increases across shells: {:?}",
            shells.iter().map(|s| s.osc.to_f64_lossy()).collect::<Vec<_>>()
        )));
    }
    let theta_fit = if flat || first <= lit::<T>(1e-12) {
        T::zero()
    } else {
        geometric_rate(&shells)
    };
    Ok(ContractionReport {
        pair: k,
        c_hat,
        c_hat_offcenter,
        c_hat_shifted,
        passed: shells.len() >= 2 && theta_fit <= bound + lit(1e-3),
        shells,
        r_max,
        theta_fit,
        bound,
        monotone,
    })
}

/// Smallest row step `j` such that `c = r_j/a` satisfies the two-sided
/// comparison `f(x)/f(x_t) ∈ [1/c, c]` on `ct ≤ |x| ≤ b/c`, with
/// `x_t = (ct, θ₀)`, for `f = Q` at `t = a`. With `noise` given the same is
/// required of `Q - m(t)` and `M(t) - Q` at every shell `t = c^k a`, where
/// `m, M` are the extrema over `t ≤ |x| ≤ b/c`; shells whose oscillation is
/// below `noise` count as settled.
fn harnack_rows<T: Real>(grid: &ConeGrid<T>, q: &[Option<T>], i0: usize, noise: Option<T>) -> Option<usize> {
    let last = grid.n_rows() - 1;
    let value = |j: usize| q[grid.index(j, i0)];
    'step: for js in 1..=last / 3 {
        let c = grid.radius(js) / grid.radius(0);
        let top = last - js;
        let (Some(qa), Some((sup, inf))) = (value(js), extrema_rows(grid, q, js, top)) else { continue };
        if !(qa > T::zero() && sup / qa <= c && inf / qa >= T::one() / c) {
            continue;
        }
        let Some(noise) = noise else { return Some(js) };
        let mut k = 1;
        while (k + 1) * js <= top {
            let (lo, refr) = (k * js, (k + 1) * js);
            k += 1;
            let (Some((big, small)), Some((sup, inf)), Some(q0)) =
                (extrema_rows(grid, q, lo, top), extrema_rows(grid, q, refr, top), value(refr))
            else {
                continue 'step;
            };
            if big - small <= noise {
                continue;
            }
            let (below, above) = (q0 - small, big - q0);
            let ok = below > T::zero()
                && above > T::zero()
                && inf - small >= below / c
                && sup - small <= below * c
                && big - inf <= above * c
                && big - sup >= above / c;
            if !ok {
                continue 'step;
            }
        }
        return Some(js);
    }
    None
}

fn extrema_rows<T: Real>(grid: &ConeGrid<T>, q: &[Option<T>], lo: usize, hi: usize) -> Option<(T, T)> {
    (lo..=hi)
        .flat_map(|j| (0..grid.n_cols()).filter_map(move |i| q[grid.index(j, i)]))
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((m, n)) => Some((m.max(v), n.min(v))),
        })
}

/// `exp` of the least-squares slope of `ln osc_j` against `j`.
fn geometric_rate<T: Real>(shells: &[Shell<T>]) -> T {
    let pts: Vec<(T, T)> = shells
        .iter()
        .enumerate()
        .filter(|(_, s)| s.osc > T::zero())
        .map(|(j, s)| (T::from_usize_lossy(j), s.osc.ln()))
        .collect();
    if pts.len() < 2 {
        return T::zero();
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxy / sxx).exp()
}
