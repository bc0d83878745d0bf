//! Axisymmetric reduction of the spherical eigenvalue problem to a
//! colatitude ODE, solved by shooting from the pole (caps) or from one
//! endpoint (arcs), with the exponent found by root-finding on the first
//! zero of the profile.

mod dopri;
mod grid;

pub use grid::ColatGrid;

use crate::eigen::{Eigenpair, Profile};
use crate::error::{Error, Result};
use crate::geometry::{Branch, PParams, SphericalDomain};
use crate::scalar::{lit, Real};
use dopri::{dopri_step, next_step};

/// Integrator settings for [`shoot_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Number of uniform intervals of the recorded trajectory on `[0, alpha]`.
    pub grid_intervals: usize,
    /// Weight regularization `q -> q + eps^2`, used only when `p < 2`.
    pub eps: T,
    /// Colatitude at which the pole series hands over to the integrator.
    pub theta_start: T,
    pub initial_step: T,
}

impl<T: Real> Default for ShootOptions<T> {
    fn default() -> Self {
        let floor = T::epsilon() * lit(64.0);
        Self {
            rtol: lit::<T>(1e-12).max(floor),
            atol: lit::<T>(1e-14).max(floor * lit(1e-2)),
            grid_intervals: 512,
            eps: lit(1e-10),
            theta_start: lit(1e-6),
            initial_step: lit(1e-4),
        }
    }
}

/// Outcome of one shot at a fixed exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootResult<T> {
    /// First colatitude where the profile changes sign, `+inf` when none
    /// occurs before the end of the integration range.
    pub first_zero: T,
    /// Profile value at `alpha`.
    pub endpoint_value: T,
    pub trajectory: ColatGrid<T>,
    /// Largest observed `eps^2 / (q + eps^2)` along accepted states.
    pub max_regularization: T,
    pub steps: usize,
}

/// Explicit first order form `(w', w'')` of the axisymmetric equation
///
/// `-(sin θ)^{2-N} (sin^{N-2}θ q^{(p-2)/2} w')' = (p-1) β (β-β0) q^{(p-2)/2} w`,
/// `q = β^2 w^2 + w'^2`, with the sine factors absent for arcs (`N = 2`).
pub fn ode_rhs<T: Real>(params: &PParams<T>, beta: T, theta: T, omega: T, omega_prime: T) -> Result<(T, T)> {
    if params.dim() >= 3 && !(theta > T::zero() && theta < T::PI()) {
        return Err(Error::InvalidParams(format!(
            "colatitude {theta} outside (0, π) for a cap profile"
        )));
    }
    let q = beta * beta * omega * omega + omega_prime * omega_prime;
    if q == T::zero() {
        if params.p() < lit(2.0) {
            return Err(Error::DegenerateWeight {
                p: params.p().to_f64_lossy(),
            });
        }
        return Ok((T::zero(), T::zero()));
    }
    let lambda = params.eigen_factor(beta);
    Ok((
        omega_prime,
        second_derivative(params, beta, lambda, theta, omega, omega_prime, T::zero()),
    ))
}

#[inline]
fn second_derivative<T: Real>(
    params: &PParams<T>,
    beta: T,
    lambda: T,
    theta: T,
    w: T,
    wp: T,
    eps2: T,
) -> T {
    let p = params.p();
    let b2w2 = beta * beta * w * w;
    let wp2 = wp * wp;
    let q = b2w2 + wp2 + eps2;
    let den = b2w2 + (p - T::one()) * wp2 + eps2;
    if den == T::zero() {
        return T::zero();
    }
    let transport = if params.dim() >= 3 {
        T::from_usize_lossy(params.dim() - 2) * theta.cos() / theta.sin() * wp
    } else {
        T::zero()
    };
    let num = (p - lit(2.0)) * beta * beta * w * wp2 + q * (transport + lambda * w);
    -num / den
}

fn check_alpha<T: Real>(params: &PParams<T>, alpha: T) -> Result<()> {
    let limit = if params.dim() == 2 { T::TAU() } else { T::PI() };
    if !(alpha > T::zero() && alpha < limit) {
        return Err(Error::InvalidDomain(format!(
            "opening {alpha} outside (0, {limit}) for dimension {}",
            params.dim()
        )));
    }
    Ok(())
}

/// Shoots with default integrator settings; see [`shoot_with`].
pub fn shoot<T: Real>(params: &PParams<T>, beta: T, alpha: T) -> Result<ShootResult<T>> {
    shoot_with(params, beta, alpha, &ShootOptions::default())
}

/// Integrates the profile ODE from `theta = 0` at exponent `beta`.
///
/// Arcs (`N = 2`) start from `w(0) = 0, w'(0) = 1`; caps start from the
/// regular pole series `w = 1 + c2 θ^2`. Integration continues past
/// `alpha` until the first sign change of `w` (or the end of the range, in
/// which case `first_zero = +inf`).
pub fn shoot_with<T: Real>(
    params: &PParams<T>,
    beta: T,
    alpha: T,
    opts: &ShootOptions<T>,
) -> Result<ShootResult<T>> {
    check_alpha(params, alpha)?;
    if beta == T::zero() || !beta.is_finite() {
        return Err(Error::InvalidParams(format!("exponent must be finite and nonzero, got {beta}")));
    }
    let cap = params.dim() >= 3;
    let lambda = params.eigen_factor(beta);
    let eps2 = if params.p() < lit(2.0) {
        opts.eps * opts.eps
    } else {
        T::zero()
    };
    let rhs = |t: T, y: &[T; 2]| -> [T; 2] {
        [y[1], second_derivative(params, beta, lambda, t, y[0], y[1], eps2)]
    };

    let n = opts.grid_intervals.max(1);
    let grid: Vec<T> = (0..=n)
        .map(|j| alpha * T::from_usize_lossy(j) / T::from_usize_lossy(n))
        .collect();
    let mut values = vec![T::zero(); n + 1];
    let mut derivs = vec![T::zero(); n + 1];

    let (mut t, mut y, theta_max) = if cap {
        let c2 = -lambda / (lit::<T>(2.0) * T::from_usize_lossy(params.dim() - 1));
        let t0 = opts.theta_start.min(alpha * lit(1e-3));
        values[0] = T::one();
        derivs[0] = T::zero();
        (
            t0,
            [T::one() + c2 * t0 * t0, lit::<T>(2.0) * c2 * t0],
            T::PI() - opts.theta_start,
        )
    } else {
        values[0] = T::zero();
        derivs[0] = T::one();
        (T::zero(), [T::zero(), T::one()], T::TAU())
    };

    let mut h = opts.initial_step;
    let min_step = T::epsilon() * lit(16.0);
    let mut next = 1usize;
    let mut zero: Option<T> = None;
    let mut steps = 0usize;
    let mut max_reg = T::zero();

    while !(zero.is_some() && next > n) && t < theta_max {
        let target = if next <= n { grid[next] } else { theta_max };
        let gap = target - t;
        let clipped = h >= gap;
        let hh = if clipped { gap } else { h };
        let (y5, err) = dopri_step(&rhs, t, &y, hh, opts.rtol, opts.atol);
        let finite = y5[0].is_finite() && y5[1].is_finite() && err.is_finite();
        let err = if finite { err } else { T::infinity() };
        if err <= T::one() {
            if zero.is_none() && y[0] > T::zero() && y5[0] <= T::zero() {
                zero = Some(locate_zero(&rhs, t, &y, hh, opts));
            }
            t = if clipped { target } else { t + hh };
            y = y5;
            steps += 1;
            if eps2 > T::zero() {
                let q = beta * beta * y[0] * y[0] + y[1] * y[1];
                max_reg = max_reg.max(eps2 / (q + eps2));
            }
            if next <= n && t == target {
                values[next] = y[0];
                derivs[next] = y[1];
                next += 1;
            }
            if !clipped {
                h = next_step(hh, err);
            }
        } else {
            h = next_step(hh, if finite { err } else { lit(1e6) });
        }
        if h < min_step * (T::one() + t.abs()) {
            return Err(Error::IntegratorError {
                theta: t.to_f64_lossy(),
                reason: "step size underflow".into(),
            });
        }
    }
    if next <= n {
        return Err(Error::IntegratorError {
            theta: t.to_f64_lossy(),
            reason: "integration range ended before the opening".into(),
        });
    }
    let trajectory = ColatGrid::new(grid, values, derivs)?;
    Ok(ShootResult {
        first_zero: zero.unwrap_or(T::infinity()),
        endpoint_value: *trajectory.values().last().expect("nonempty"),
        trajectory,
        max_regularization: max_reg,
        steps,
    })
}

/// Locates the sign change inside an accepted step by root-finding on the
/// length of a single step from the left state.
fn locate_zero<T: Real, F>(rhs: &F, t: T, y: &[T; 2], h: T, opts: &ShootOptions<T>) -> T
where
    F: Fn(T, &[T; 2]) -> [T; 2],
{
    let value = |s: T| dopri_step(rhs, t, y, s, opts.rtol, opts.atol).0[0];
    let (mut a, mut fa) = (T::zero(), y[0]);
    let (mut b, mut fb) = (h, value(h));
    if fb == T::zero() {
        return t + h;
    }
    let mut side = 0i8;
    let tiny = T::epsilon() * (T::one() + t.abs()) * lit(4.0);
    for _ in 0..100 {
        if b - a <= tiny {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = (a + b) * lit(0.5);
        }
        let fc = value(c);
        if fc == T::zero() {
            return t + c;
        }
        if (fc > T::zero()) == (fa > T::zero()) {
            a = c;
            fa = fc;
            if side == 1 {
                fb = fb * lit(0.5);
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa = fa * lit(0.5);
            }
            side = -1;
        }
    }
    t + (a * fb - b * fa) / (fb - fa)
}

/// Settings for [`solve_beta_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaOptions<T> {
    /// Absolute tolerance on the exponent.
    pub tol: T,
    /// Search range for `|beta|`, scanned geometrically.
    pub scan_min: T,
    pub scan_max: T,
    pub scan_points: usize,
    pub max_iter: usize,
    pub shoot: ShootOptions<T>,
}

impl<T: Real> BetaOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            scan_min: lit(1e-3),
            scan_max: lit(50.0),
            scan_points: 60,
            max_iter: 200,
            shoot: ShootOptions::default(),
        }
    }
}

impl<T: Real> Default for BetaOptions<T> {
    fn default() -> Self {
        Self::with_tol(lit::<T>(1e-10).max(T::epsilon() * lit(1e3)))
    }
}

/// Full record of an exponent solve.
#[derive(Clone, Debug)]
pub struct BetaSolution<T> {
    pub eigenpair: Eigenpair<T>,
    /// Final bracket on `beta` (ordered `lo < hi`).
    pub bracket: (T, T),
    /// The geometric scan as `(beta, first_zero)` pairs.
    pub scan: Vec<(T, T)>,
    pub max_regularization: T,
}

/// Exponent and normalized principal profile on an arc or cap.
pub fn solve_beta<T: Real>(
    params: &PParams<T>,
    domain: &SphericalDomain<T>,
    branch: Branch,
    tol: T,
) -> Result<Eigenpair<T>> {
    solve_beta_with(params, domain, branch, &BetaOptions::with_tol(tol)).map(|s| s.eigenpair)
}

pub fn solve_beta_with<T: Real>(
    params: &PParams<T>,
    domain: &SphericalDomain<T>,
    branch: Branch,
    opts: &BetaOptions<T>,
) -> Result<BetaSolution<T>> {
    let alpha = axisymmetric_opening(params, domain)?;
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let sign: T = branch.sign();
    let scan_opts = ShootOptions {
        grid_intervals: 1,
        ..opts.shoot
    };
    let zero_at = |s: T| -> Result<T> { Ok(shoot_with(params, sign * s, alpha, &scan_opts)?.first_zero) };

    let k = opts.scan_points.max(2);
    let ratio = (opts.scan_max / opts.scan_min).ln();
    let mut scan = Vec::with_capacity(k);
    for i in 0..k {
        let s = opts.scan_min * (ratio * T::from_usize_lossy(i) / T::from_usize_lossy(k - 1)).exp();
        scan.push((s, zero_at(s)?));
    }
    for i in 1..k {
        let (prev, cur) = (scan[i - 1].1, scan[i].1);
        if prev.is_finite() && !(cur < prev) {
            return Err(Error::MonotonicityViolation {
                index: i,
                detail: format!(
                    "first zero {cur} at |beta| = {} does not decrease from {prev} at |beta| = {}",
                    scan[i].0,
                    scan[i - 1].0
                ),
            });
        }
    }
    let Some(idx) = (0..k - 1).find(|&i| scan[i].1 > alpha && scan[i + 1].1 <= alpha) else {
        return Err(Error::BracketFailure {
            lo: (sign * opts.scan_min).to_f64_lossy(),
            hi: (sign * opts.scan_max).to_f64_lossy(),
        });
    };

    // Illinois iteration on f(s) = first_zero(s) - alpha, f(lo) > 0 >= f(hi)
    let (mut lo, mut hi) = (scan[idx].0, scan[idx + 1].0);
    let (mut flo, mut fhi) = (scan[idx].1 - alpha, scan[idx + 1].1 - alpha);
    let mut s = hi;
    let mut side = 0i8;
    let mut iterations = 0;
    while iterations < opts.max_iter && hi - lo > opts.tol {
        iterations += 1;
        let mut c = if flo.is_finite() {
            (lo * fhi - hi * flo) / (fhi - flo)
        } else {
            (lo * hi).sqrt()
        };
        if !(c > lo && c < hi) {
            c = (lo + hi) * lit(0.5);
        }
        let fc = zero_at(c)? - alpha;
        s = c;
        if fc == T::zero() {
            lo = c;
            hi = c;
            break;
        }
        if fc > T::zero() {
            lo = c;
            flo = fc;
            if side == 1 {
                fhi = fhi * lit(0.5);
            }
            side = 1;
        } else {
            hi = c;
            fhi = fc;
            if side == -1 && flo.is_finite() {
                flo = flo * lit(0.5);
            }
            side = -1;
        }
        // the zero map is only as accurate as the integrator
        if fc.abs() <= opts.shoot.rtol * alpha {
            break;
        }
    }
    let beta = sign * s;
    let shot = shoot_with(params, beta, alpha, &opts.shoot)?;
    let scale = shot.trajectory.sup_norm();
    let mut traj = shot.trajectory;
    let endpoint = shot.endpoint_value;
    let last = traj.len() - 1;
    traj.values_mut()[last] = T::zero();
    let mass = traj.integral_abs(params.dim());
    let traj = traj.scaled(T::one() / mass);
    let (blo, bhi) = if sign > T::zero() { (lo, hi) } else { (-hi, -lo) };
    Ok(BetaSolution {
        eigenpair: Eigenpair {
            beta,
            omega: Profile::Colat(traj),
            branch,
            residual_norm: (endpoint / scale).abs(),
            iterations,
        },
        bracket: (blo, bhi),
        scan: scan.into_iter().map(|(s, z)| (sign * s, z)).collect(),
        max_regularization: shot.max_regularization,
    })
}

/// Opening of an arc or cap, checked against the parameters' dimension.
pub(crate) fn axisymmetric_opening<T: Real>(params: &PParams<T>, domain: &SphericalDomain<T>) -> Result<T> {
    match domain {
        SphericalDomain::Arc { alpha } if params.dim() == 2 => Ok(*alpha),
        SphericalDomain::Cap { alpha, dim } if *dim == params.dim() => Ok(*alpha),
        SphericalDomain::Polygon(_) => Err(Error::InvalidDomain(
            "the profile ODE applies to arcs and caps only".into(),
        )),
        _ => Err(Error::InvalidParams(format!(
            "parameter dimension {} does not match the domain",
            params.dim()
        ))),
    }
}

#[cfg(test)]
mod tests;
