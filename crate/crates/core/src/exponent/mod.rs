//! Exponents of a domain through inner and outer approximating families,
//! the bracket they form, and a quotient diagnostic for comparing two
//! positive eigenfunctions.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{Eigenpair, Profile};
use crate::error::{Error, Result};
use crate::fem::{solve_nonlinear, SurfaceMesh};
use crate::geometry::{Branch, DomainFamily, FamilyDirection, PParams, SphericalDomain};
use crate::ode::{solve_beta, ColatGrid};
use crate::scalar::{lit, Real};

/// How the exponent of a single domain is computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentOptions<T> {
    pub tol: T,
    /// Uniform refinement levels of polygon meshes.
    pub polygon_levels: usize,
}

impl<T: Real> ExponentOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, polygon_levels: 4 }
    }
}

/// Exponent and eigenfunction of one domain: shooting for arcs and caps,
/// finite elements for polygons.
pub fn solve_exponent<T: Real>(
    params: &PParams<T>,
    domain: &SphericalDomain<T>,
    branch: Branch,
    opts: &ExponentOptions<T>,
) -> Result<Eigenpair<T>> {
    match domain {
        SphericalDomain::Polygon(poly) => {
            let mesh = SurfaceMesh::polygon(poly, opts.polygon_levels)?;
            solve_nonlinear(&Arc::new(mesh.space()?), params, branch, opts.tol)
        }
        _ => solve_beta(params, domain, branch, opts.tol),
    }
}

/// Limit of a sequence indexed by dyadic margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrapolation<T> {
    pub value: T,
    /// Observed convergence order in the margin, when the fit is usable.
    pub order: Option<T>,
    /// Error bar: the Richardson correction, or the last increment when the
    /// fit is rejected.
    pub error: T,
}

/// Richardson extrapolation of `values[k]` taken at margins
/// `steps[0] 2^-k`. The ratio of successive increments is fitted on every
/// triple, which removes the leading error term whatever its order; the
/// elimination is repeated on the resulting column while it keeps
/// improving.
pub fn richardson<T: Real>(values: &[T]) -> Extrapolation<T> {
    let n = values.len();
    let Some(&last) = values.last() else {
        return Extrapolation {
            value: T::nan(),
            order: None,
            error: T::infinity(),
        };
    };
    let mut estimate = Extrapolation {
        value: last,
        order: None,
        error: if n >= 2 { (values[n - 1] - values[n - 2]).abs() } else { T::infinity() },
    };
    let mut column = values.to_vec();
    while column.len() >= 3 {
        let mut next = Vec::with_capacity(column.len() - 2);
        let mut order = T::zero();
        for w in column.windows(3) {
            let (d0, d1) = (w[1] - w[0], w[2] - w[1]);
            let ratio = d0 / d1;
            order = ratio.log2();
            // orders outside [1/4, 8] mean the increments are noise, change
            // sign, or are not yet asymptotic; only the trailing run is kept
            if ratio.is_finite() && order >= lit(0.25) && order <= lit(8.0) {
                next.push(w[2] + d1 / (ratio - T::one()));
            } else {
                next.clear();
            }
        }
        let Some(&value) = next.last() else { break };
        let correction = (value - estimate.value).abs();
        if estimate.order.is_some() && correction > estimate.error {
            break;
        }
        estimate = Extrapolation {
            value,
            order: estimate.order.or(Some(order)),
            error: correction,
        };
        column = next;
    }
    estimate
}

/// Exponents of one approximating family.
#[derive(Clone, Debug)]
pub struct FamilyApproximation<T> {
    pub direction: FamilyDirection,
    pub steps: Vec<T>,
    pub betas: Vec<T>,
    pub residuals: Vec<T>,
    pub limit: Extrapolation<T>,
    /// Eigenfunction of the last member.
    pub last: Eigenpair<T>,
}

/// `|β|` shrinks as domains grow, so the inner family (growing) has
/// non-increasing `|β|` and the outer family (shrinking) non-decreasing `|β|`.
fn check_monotone<T: Real>(direction: FamilyDirection, betas: &[T], tol: T) -> Result<()> {
    for (k, w) in betas.windows(2).enumerate() {
        let (a, b) = (w[0].abs(), w[1].abs());
        let bad = match direction {
            FamilyDirection::Inner => b > a + tol,
            FamilyDirection::Outer => b < a - tol,
        };
        if bad {
            let want = match direction {
                FamilyDirection::Inner => "non-increasing",
                FamilyDirection::Outer => "non-decreasing",
            };
            return Err(Error::MonotonicityViolation {
                index: k + 1,
                detail: format!(
                    "|beta| should be {want}: |beta_{k}| = {a}, |beta_{}| = {b}, tolerance {tol}",
                    k + 1
                ),
            });
        }
    }
    Ok(())
}

fn approximate<T: Real>(
    domain: &SphericalDomain<T>,
    params: &PParams<T>,
    branch: Branch,
    direction: FamilyDirection,
    steps: &[T],
    opts: &ExponentOptions<T>,
) -> Result<FamilyApproximation<T>> {
    let family = DomainFamily::new(domain.clone(), direction, steps.to_vec())?;
    let members = family.members()?;
    let solved: Vec<Eigenpair<T>> = members
        .par_iter()
        .map(|m| solve_exponent(params, m, branch, opts))
        .collect::<Result<_>>()?;
    let betas: Vec<T> = solved.iter().map(|e| e.beta).collect();
    let residuals = solved.iter().map(|e| e.residual_norm).collect();
    check_monotone(direction, &betas, opts.tol)?;
    let limit = richardson(&betas);
    let last = solved.into_iter().last().expect("family is nonempty");
    Ok(FamilyApproximation {
        direction,
        steps: steps.to_vec(),
        betas,
        residuals,
        limit,
        last,
    })
}

/// Exponents of the shrunk domains `S_k`, which exhaust `S` from inside.
pub fn approximate_from_inside<T: Real>(
    domain: &SphericalDomain<T>,
    params: &PParams<T>,
    branch: Branch,
    steps: &[T],
    opts: &ExponentOptions<T>,
) -> Result<FamilyApproximation<T>> {
    approximate(domain, params, branch, FamilyDirection::Inner, steps, opts)
}

/// Exponents of the expanded domains `S'_k`, which enclose `S`.
pub fn approximate_from_outside<T: Real>(
    domain: &SphericalDomain<T>,
    params: &PParams<T>,
    branch: Branch,
    steps: &[T],
    opts: &ExponentOptions<T>,
) -> Result<FamilyApproximation<T>> {
    approximate(domain, params, branch, FamilyDirection::Outer, steps, opts)
}

/// Inner and outer exponent sequences of a domain and the gap between
/// their limits.
#[derive(Clone, Debug)]
pub struct BracketResult<T> {
    pub steps: Vec<T>,
    pub beta_inner: Vec<T>,
    pub beta_outer: Vec<T>,
    pub residual_inner: Vec<T>,
    pub residual_outer: Vec<T>,
    pub beta_in_limit: T,
    pub beta_out_limit: T,
    pub inner_limit: Extrapolation<T>,
    pub outer_limit: Extrapolation<T>,
    /// `|beta_in_limit| - |beta_out_limit|`; nonnegative up to tolerance.
    pub gap: T,
    pub branch: Branch,
    pub inner: Eigenpair<T>,
    pub outer: Eigenpair<T>,
}

impl<T: Real> BracketResult<T> {
    /// `|β_in - β_out|` at the finest step.
    pub fn final_gap(&self) -> T {
        match (self.beta_inner.last(), self.beta_outer.last()) {
            (Some(&a), Some(&b)) => (a - b).abs(),
            _ => T::nan(),
        }
    }

    /// Report with one row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,delta,beta_inner,beta_outer,residual_inner,residual_outer,gap\n");
        for k in 0..self.steps.len() {
            let _ = writeln!(
                out,
                "{k},{:e},{:.12e},{:.12e},{:.3e},{:.3e},{:.6e}",
                self.steps[k].to_f64_lossy(),
                self.beta_inner[k].to_f64_lossy(),
                self.beta_outer[k].to_f64_lossy(),
                self.residual_inner[k].to_f64_lossy(),
                self.residual_outer[k].to_f64_lossy(),
                (self.beta_inner[k] - self.beta_outer[k]).abs().to_f64_lossy()
            );
        }
        out
    }
}

/// Runs both approximations. A limit gap below `-tol` indicates that the
/// discretization failed and is reported as [`Error::NegativeGap`].
pub fn exponent_bracket<T: Real>(
    domain: &SphericalDomain<T>,
    params: &PParams<T>,
    branch: Branch,
    steps: &[T],
    opts: &ExponentOptions<T>,
) -> Result<BracketResult<T>> {
    let (inner, outer) = rayon::join(
        || approximate_from_inside(domain, params, branch, steps, opts),
        || approximate_from_outside(domain, params, branch, steps, opts),
    );
    let (inner, outer) = (inner?, outer?);
    let gap = inner.limit.value.abs() - outer.limit.value.abs();
    // the limits carry their own extrapolation error on top of the solve tolerance
    let slack = opts.tol + inner.limit.error + outer.limit.error;
    if gap < -slack {
        return Err(Error::NegativeGap {
            gap: gap.to_f64_lossy(),
            tol: slack.to_f64_lossy(),
        });
    }
    if let Some(k) = (0..steps.len()).find(|&k| inner.betas[k].abs() < outer.betas[k].abs() - opts.tol) {
        return Err(Error::NegativeGap {
            gap: (inner.betas[k].abs() - outer.betas[k].abs()).to_f64_lossy(),
            tol: opts.tol.to_f64_lossy(),
        });
    }
    Ok(BracketResult {
        steps: steps.to_vec(),
        beta_in_limit: inner.limit.value,
        beta_out_limit: outer.limit.value,
        inner_limit: inner.limit,
        outer_limit: outer.limit,
        gap,
        branch,
        beta_inner: inner.betas,
        beta_outer: outer.betas,
        residual_inner: inner.residuals,
        residual_outer: outer.residuals,
        inner: inner.last,
        outer: outer.last,
    })
}

/// Transplants a colatitude profile from its own interval `[0, alpha_k]` to
/// `n` uniform intervals of `[0, alpha]` through `θ ↦ θ alpha_k / alpha`, so
/// profiles of different family members can be compared pointwise.
pub fn pullback<T: Real>(grid: &ColatGrid<T>, alpha: T, n: usize) -> Result<ColatGrid<T>> {
    let ratio = grid.alpha() / alpha;
    ColatGrid::from_fn(alpha, n, |t| {
        let (v, d) = grid.eval_with_derivative(t * ratio);
        (v, d * ratio)
    })
}

/// Comparison of two positive eigenfunctions through `ln(ω/ω')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuotientDiagnostic<T> {
    /// `sup - inf` of `ln(ω/ω')` over interior samples.
    pub osc_log_ratio: T,
    /// `c` in `|L(σ1) - L(σ2)| <= c |σ1 - σ2|^a`.
    pub holder_constant: T,
    pub holder_exponent: T,
    /// `exp(osc)`: after rescaling, `c⁻¹ ω' <= ω <= c ω'`.
    pub comparability_constant: T,
    /// Factor applied to `ω'` so that `sup(ω'/ω) = 1`.
    pub scale: T,
    pub samples: usize,
}

/// Interior sample points (as coordinates) and values of a profile.
fn interior_samples<T: Real>(profile: &Profile<T>) -> (Vec<Vec<T>>, Vec<T>) {
    match profile {
        Profile::Colat(grid) => {
            let n = grid.len();
            (1..n - 1)
                .map(|i| (vec![grid.nodes()[i]], grid.values()[i]))
                .unzip()
        }
        Profile::Mesh(field) => {
            let space = field.space();
            space
                .interior_nodes()
                .into_iter()
                .map(|i| (space.coords()[i].to_vec(), field.values()[i]))
                .unzip()
        }
    }
}

const MAX_PAIR_SAMPLES: usize = 400;

/// Quotient diagnostic of two positive profiles sampled at the same points.
pub fn proportionality_diagnostic<T: Real>(omega: &Profile<T>, omega_prime: &Profile<T>) -> Result<QuotientDiagnostic<T>> {
    let (points, a) = interior_samples(omega);
    let (points_b, b) = interior_samples(omega_prime);
    if a.len() != b.len() || points != points_b {
        return Err(Error::InvalidParams("profiles are not sampled at the same points".into()));
    }
    if a.is_empty() {
        return Err(Error::InvalidParams("profiles have no interior samples".into()));
    }
    for (i, (&x, &y)) in a.iter().zip(&b).enumerate() {
        if !(x > T::zero()) || !(y > T::zero()) {
            return Err(Error::PositivityError {
                node: i,
                value: x.min(y).to_f64_lossy(),
            });
        }
    }
    let scale = T::one() / a.iter().zip(&b).map(|(&x, &y)| y / x).fold(T::zero(), T::max);
    let logs: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| (x / (y * scale)).ln()).collect();
    let hi = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = logs.iter().copied().fold(T::infinity(), T::min);
    let osc = (hi - lo).max(T::zero());
    let (holder_constant, holder_exponent) = holder_fit(&points, &logs);
    Ok(QuotientDiagnostic {
        osc_log_ratio: osc,
        holder_constant,
        holder_exponent,
        comparability_constant: osc.exp(),
        scale,
        samples: logs.len(),
    })
}

/// Log-log regression of `|ΔL|` against the chordal distance over sample
/// pairs; the constant is the smallest `c` bounding every pair at the
/// fitted exponent.
fn holder_fit<T: Real>(points: &[Vec<T>], logs: &[T]) -> (T, T) {
    let stride = points.len().div_ceil(MAX_PAIR_SAMPLES).max(1);
    let idx: Vec<usize> = (0..points.len()).step_by(stride).collect();
    let dist = |i: usize, j: usize| -> T {
        points[i]
            .iter()
            .zip(&points[j])
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum::<T>()
            .sqrt()
    };
    let mut pairs = Vec::new();
    for (u, &i) in idx.iter().enumerate() {
        for &j in &idx[u + 1..] {
            let d = dist(i, j);
            let dl = (logs[i] - logs[j]).abs();
            if d > T::zero() && dl > T::epsilon() * lit(16.0) {
                pairs.push((d.ln(), dl.ln()));
            }
        }
    }
    if pairs.len() < 2 {
        return (T::zero(), T::one());
    }
    let n = T::from_usize_lossy(pairs.len());
    let mx = pairs.iter().map(|p| p.0).sum::<T>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<T>() / n;
    let sxx = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    let sxy = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let slope = if sxx > T::zero() { sxy / sxx } else { T::one() };
    let exponent = slope.max(lit(1e-3)).min(T::one());
    let constant = pairs
        .iter()
        .map(|&(ld, ll)| (ll - exponent * ld).exp())
        .fold(T::zero(), T::max);
    (constant, exponent)
}

#[cfg(test)]
mod tests;
