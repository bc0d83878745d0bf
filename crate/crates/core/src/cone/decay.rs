use std::sync::Arc;

use serde::Serialize;

use super::{solve_truncated, ConeField, ConeGrid, ConeOptions, Outer};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Least-squares decay rate along one ray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit<T> {
    /// `-d ln u / d ln r`.
    pub beta_fit: T,
    /// Radii bounding the fit window.
    pub r_range: (T, T),
    pub samples: usize,
    pub theta: T,
}

/// Slope of `ln u` against `ln r` along the angle node nearest `theta0`,
/// over the middle third of `[ln a, ln b]`.
pub fn decay_fit<T: Real>(field: &ConeField<T>, theta0: T) -> Result<DecayFit<T>> {
    let grid = field.grid();
    let i = grid.nearest_angle(theta0);
    if grid.is_lateral(i) {
        return Err(Error::FitError(format!("ray at theta = {theta0} lies on the lateral boundary")));
    }
    let s = grid.s();
    let (s0, s1) = (s[0], s[s.len() - 1]);
    let third = (s1 - s0) / T::from_usize_lossy(3);
    let (lo, hi) = (s0 + third, s1 - third);
    let slack = (s[1] - s[0]) * T::epsilon().sqrt();
    let mut pts = Vec::new();
    for (j, &sj) in s.iter().enumerate() {
        if sj < lo - slack || sj > hi + slack {
            continue;
        }
        let u = field.at(j, i);
        if !(u > T::zero()) {
            return Err(Error::FitError(format!("nonpositive value {u} at r = {}", sj.exp())));
        }
        pts.push((sj, u.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::FitError("fewer than two samples in the fit window".into()));
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(DecayFit {
        beta_fit: -sxy / sxx,
        r_range: (lo.exp(), hi.exp()),
        samples: pts.len(),
        theta: grid.theta()[i],
    })
}

/// Decay exponent of the cone solution with a given inner trace.
#[derive(Clone, Debug)]
pub struct DecayExponent<T> {
    /// Fit with the self-consistent outer condition.
    pub fit: DecayFit<T>,
    /// Fit of the solution vanishing on `r = b`.
    pub zero_outer: DecayFit<T>,
    /// Residual `fit(γ) - γ` of the accepted outer exponent.
    pub mismatch: T,
    pub iterations: usize,
    pub field: ConeField<T>,
    pub zero_outer_field: ConeField<T>,
}

/// Fits the decay rate of the cone solution with trace `inner`.
///
/// With `u = 0` on `r = b` the field carries a second, growing separable
/// component whose relative size `(r/b)^{β-β'}` biases the slope whenever
/// the two exponents are close. The outer trace is therefore replaced by
/// that of a separable solution, `(a/b)^γ inner`, and `γ` is iterated by a
/// secant method on `fit(γ) = γ`, starting from the zero-outer fit. The
/// exact separable solution is the fixed point.
pub fn decay_exponent<T: Real>(
    grid: &Arc<ConeGrid<T>>,
    inner: &[T],
    theta0: T,
    opts: &ConeOptions<T>,
) -> Result<DecayExponent<T>> {
    let zero_outer_field = solve_truncated(grid, inner, Outer::Zero, opts)?;
    let zero_outer = decay_fit(&zero_outer_field, theta0)?;
    let eval = |gamma: T| -> Result<(T, DecayFit<T>, ConeField<T>)> {
        let f = solve_truncated(grid, inner, Outer::Decay(gamma), opts)?;
        let fit = decay_fit(&f, theta0)?;
        Ok((fit.beta_fit - gamma, fit, f))
    };
    let mut g0 = zero_outer.beta_fit;
    let (mut f0, fit0, field0) = eval(g0)?;
    let mut best = (f0, fit0, field0);
    let mut g1 = fit0.beta_fit;
    let target = lit::<T>(1e-7).max(T::epsilon() * lit(1e3)) * g0.abs().max(T::one());
    let mut iterations = 1;
    for _ in 0..20 {
        if best.0.abs() <= target {
            break;
        }
        iterations += 1;
        let (f1, fit1, field1) = eval(g1)?;
        if f1.abs() < best.0.abs() {
            best = (f1, fit1, field1);
        }
        if f1 == f0 {
            break;
        }
        let g2 = g1 - f1 * (g1 - g0) / (f1 - f0);
        g0 = g1;
        f0 = f1;
        g1 = g2;
    }
    let (mismatch, fit, field) = best;
    Ok(DecayExponent {
        fit,
        zero_outer,
        mismatch,
        iterations,
        field,
        zero_outer_field,
    })
}
