use std::sync::Arc;

use super::assemble::{assemble_weighted, evaluate_residual, WeightedForms};
use super::space::{DiscreteField, P1Space};
use crate::eigen::{Eigenpair, Profile};
use crate::error::{Error, Result};
use crate::geometry::{Branch, PParams};
use crate::linalg::SparseSym;
use crate::scalar::{lit, Real};

/// Inverse iteration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions<T> {
    /// Relative change of the Rayleigh quotient and of the iterate.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit::<T>(1e-12).max(T::epsilon() * lit(100.0)),
            max_iter: 2000,
        }
    }
}

/// Principal eigenpair of `K v = μ M v` on the interior nodes, warm started
/// from `start`. The returned eigenvector is positive with `∫|v| dS = 1`.
pub fn principal_eigenpair<T: Real>(
    space: &P1Space<T>,
    forms: &WeightedForms<T>,
    start: &[T],
    opts: &EigenOptions<T>,
) -> Result<(T, Vec<T>, usize)> {
    let keep = space.interior_nodes();
    if keep.is_empty() {
        return Err(Error::MeshError("mesh has no interior nodes".into()));
    }
    let k = forms.stiffness.restrict(&keep);
    let m = forms.mass.restrict(&keep);
    let chol = k.cholesky()?;
    let mut x: Vec<T> = keep.iter().map(|&i| start[i].max(T::zero())).collect();
    if !x.iter().any(|&v| v > T::zero()) {
        x.iter_mut().for_each(|v| *v = T::one());
    }
    normalize_m(&m, &mut x);
    let mut mu_prev = T::infinity();
    let mut change = T::infinity();
    for it in 1..=opts.max_iter {
        let mut y = chol.solve(&m.matvec(&x));
        normalize_m(&m, &mut y);
        let mu = k.bilinear(&y, &y);
        change = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
            / y.iter().fold(T::zero(), |s, v| s.max(v.abs()));
        let dmu = (mu - mu_prev).abs() / mu.abs();
        x = y;
        mu_prev = mu;
        if dmu <= opts.tol && change <= opts.tol.sqrt() * lit(1e-2) {
            let v = lift(space, &keep, &x);
            return Ok((mu, v, it));
        }
    }
    Err(Error::EigenIterError {
        iterations: opts.max_iter,
        change: change.to_f64_lossy(),
    })
}

fn normalize_m<T: Real>(m: &SparseSym<T>, x: &mut [T]) {
    let s: T = x.iter().copied().sum();
    let sign = if s < T::zero() { -T::one() } else { T::one() };
    let norm = m.bilinear(x, x).sqrt();
    x.iter_mut().for_each(|v| *v = *v * sign / norm);
}

fn lift<T: Real>(space: &P1Space<T>, keep: &[usize], x: &[T]) -> Vec<T> {
    let mut v = vec![T::zero(); space.n_nodes()];
    for (&i, &xi) in keep.iter().zip(x) {
        v[i] = xi;
    }
    let mass = space.integrate_nodal(&v, |t| t.abs());
    v.iter_mut().for_each(|t| *t = *t / mass);
    v
}

/// Smallest eigenvalue `μ` of the frozen-weight problem and its positive
/// eigenvector, normalized so that `∫|v| dS = 1`.
pub fn frozen_eigen_mu<T: Real>(
    space: &P1Space<T>,
    params: &PParams<T>,
    beta: T,
    omega_frozen: &[T],
    eps: T,
) -> Result<(T, DiscreteField<T>)>
where
    T: Real,
{
    let forms = assemble_weighted(space, params, beta, omega_frozen, eps)?;
    let (mu, v, _) = principal_eigenpair(space, &forms, omega_frozen, &EigenOptions::default())?;
    Ok((mu, DiscreteField::new(Arc::new(space.clone()), v)?))
}

/// Settings for [`solve_nonlinear_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearOptions<T> {
    /// Absolute tolerance on the exponent.
    pub tol: T,
    /// Stop the inner loop when the relative sup-norm change falls below this.
    pub picard_tol: T,
    pub picard_max: usize,
    /// Relaxation of the Picard update.
    pub damping: T,
    /// Residual history used to accelerate the fixed point iteration.
    pub anderson_depth: usize,
    /// Regularization `ε = eps0 · h`.
    pub eps0: T,
    pub max_outer: usize,
    pub eigen: EigenOptions<T>,
}

impl<T: Real> NonlinearOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            picard_tol: lit::<T>(1e-10).max(T::epsilon() * lit(1e3)),
            picard_max: 400,
            damping: T::one(),
            anderson_depth: 5,
            eps0: lit(1e-3),
            max_outer: 60,
            eigen: EigenOptions::default(),
        }
    }
}

/// Record of a nonlinear FEM solve.
#[derive(Clone, Debug)]
pub struct NonlinearSolution<T> {
    pub eigenpair: Eigenpair<T>,
    /// `μ₁(β)` at the returned exponent.
    pub mu: T,
    pub eps: T,
    /// Final root bracket on `β`.
    pub bracket: (T, T),
    pub picard_iterations: usize,
    pub outer_evaluations: usize,
    /// Nodal values clipped to zero during the Picard iterations.
    pub clipped: usize,
}

struct Picard<'a, T: Real> {
    space: &'a P1Space<T>,
    params: &'a PParams<T>,
    opts: NonlinearOptions<T>,
    eps: T,
    iterations: usize,
    clipped: usize,
}

impl<T: Real> Picard<'_, T> {
    /// Converged `μ₁(β)` and fixed point, warm started from `omega`.
    ///
    /// The plain iteration `ω ← v(ω)` contracts slowly for large `p`, so the
    /// update is Anderson mixed over the last `anderson_depth` residuals.
    fn mu(&mut self, beta: T, omega: &mut Vec<T>) -> Result<T> {
        let damping = self.opts.damping;
        let depth = self.opts.anderson_depth;
        let mut xs: Vec<Vec<T>> = Vec::new();
        let mut fs: Vec<Vec<T>> = Vec::new();
        let mut best = T::infinity();
        let mut last_change = T::infinity();
        for _ in 0..self.opts.picard_max {
            self.iterations += 1;
            let forms = assemble_weighted(self.space, self.params, beta, omega, self.eps)?;
            let (mu, v, _) = principal_eigenpair(self.space, &forms, omega, &self.opts.eigen)?;
            if self.params.p() == lit(2.0) {
                *omega = v;
                return Ok(mu);
            }
            let f: Vec<T> = v.iter().zip(omega.iter()).map(|(&b, &a)| b - a).collect();
            let scale = v.iter().fold(T::zero(), |m, t| m.max(t.abs()));
            let change = f.iter().fold(T::zero(), |m, t| m.max(t.abs())) / scale;
            last_change = change;
            if change <= self.opts.picard_tol {
                *omega = v;
                return Ok(mu);
            }
            if change > lit::<T>(10.0) * best {
                // the mixed iterate went astray: restart from the plain map
                xs.clear();
                fs.clear();
            }
            best = best.min(change);
            xs.push(omega.clone());
            fs.push(f.clone());
            if xs.len() > depth + 1 {
                xs.remove(0);
                fs.remove(0);
            }
            let gamma = if depth > 0 && xs.len() > 1 { anderson_coefficients(&fs) } else { Vec::new() };
            let mut next: Vec<T> = omega.iter().zip(&f).map(|(&a, &d)| a + damping * d).collect();
            for (j, &g) in gamma.iter().enumerate() {
                for (i, t) in next.iter_mut().enumerate() {
                    let dx = xs[j + 1][i] - xs[j][i];
                    let df = fs[j + 1][i] - fs[j][i];
                    *t = *t - g * (dx + damping * df);
                }
            }
            for t in next.iter_mut() {
                if *t < T::zero() {
                    *t = T::zero();
                    self.clipped += 1;
                }
            }
            let mass = self.space.integrate_nodal(&next, |t| t.abs());
            next.iter_mut().for_each(|t| *t = *t / mass);
            *omega = next;
        }
        Err(Error::PicardError {
            iterations: self.opts.picard_max,
            change: last_change.to_f64_lossy(),
        })
    }
}

/// Least squares `min |f_m - ΔF γ|` over the residual differences, by the
/// regularized normal equations (the history is short).
fn anderson_coefficients<T: Real>(fs: &[Vec<T>]) -> Vec<T> {
    let m = fs.len() - 1;
    let last = &fs[m];
    let diffs: Vec<Vec<T>> = (0..m)
        .map(|j| fs[j + 1].iter().zip(&fs[j]).map(|(a, b)| *a - *b).collect())
        .collect();
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(x, y)| *x * *y).sum::<T>();
    let mut a = vec![vec![T::zero(); m]; m];
    let mut rhs = vec![T::zero(); m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = dot(&diffs[i], &diffs[j]);
        }
        rhs[i] = dot(&diffs[i], last);
    }
    let trace: T = (0..m).map(|i| a[i][i]).sum();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i] + lit::<T>(1e-10) * trace + T::min_positive_value();
    }
    crate::linalg::solve_dense(a, rhs).unwrap_or_else(|| vec![T::zero(); m])
}

/// Exponent and principal eigenfunction on a mesh; see [`solve_nonlinear_with`].
pub fn solve_nonlinear<T: Real>(
    space: &Arc<P1Space<T>>,
    params: &PParams<T>,
    branch: Branch,
    tol: T,
) -> Result<Eigenpair<T>> {
    solve_nonlinear_with(space, params, branch, &NonlinearOptions::with_tol(tol), None).map(|s| s.eigenpair)
}

/// Root of `g(β) = μ₁(β) - (p-1)β(β-β0)`, where `μ₁(β)` is the converged
/// frozen-weight Picard fixed point. `initial` optionally warm starts the
/// eigenfunction.
pub fn solve_nonlinear_with<T: Real>(
    space: &Arc<P1Space<T>>,
    params: &PParams<T>,
    branch: Branch,
    opts: &NonlinearOptions<T>,
    initial: Option<&[T]>,
) -> Result<NonlinearSolution<T>> {
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let eps = opts.eps0 * space.h();
    let mut picard = Picard {
        space,
        params,
        opts: *opts,
        eps,
        iterations: 0,
        clipped: 0,
    };
    // the p = 2 eigenvalue seeds the exponent through the eigen relation
    let laplace = PParams::new(lit(2.0), params.dim())?;
    let ones = vec![T::one(); space.n_nodes()];
    let seed = initial.map(<[T]>::to_vec).unwrap_or(ones);
    let forms = assemble_weighted(space, &laplace, T::one(), &seed, T::zero())?;
    let (mu_laplace, mut omega, _) = principal_eigenpair(space, &forms, &seed, &opts.eigen)?;
    if let Some(init) = initial {
        omega = init.to_vec();
    }
    let invert = |mu: T| -> Result<T> {
        params.beta_for_eigenvalue(mu, branch).ok_or(Error::BracketFailure {
            lo: mu.to_f64_lossy(),
            hi: mu.to_f64_lossy(),
        })
    };
    let mut evaluations = 0usize;
    let mut g = |beta: T, omega: &mut Vec<T>, picard: &mut Picard<T>| -> Result<(T, T)> {
        evaluations += 1;
        let mu = picard.mu(beta, omega)?;
        Ok((mu - params.eigen_factor(beta), mu))
    };

    let mut b0 = invert(mu_laplace)?;
    let (mut g0, mu0) = g(b0, &mut omega, &mut picard)?;
    let mut b1 = invert(mu0)?;
    let mut mu_last = mu0;
    let (mut g1, mu1) = if b1 == b0 { (g0, mu0) } else { g(b1, &mut omega, &mut picard)? };
    if b1 != b0 {
        mu_last = mu1;
    }
    let mut expansions = 0;
    while g0 != T::zero() && g1 != T::zero() && (g0 > T::zero()) == (g1 > T::zero()) && (b1 - b0).abs() > opts.tol {
        expansions += 1;
        if expansions > 40 {
            return Err(Error::BracketFailure {
                lo: b0.to_f64_lossy(),
                hi: b1.to_f64_lossy(),
            });
        }
        let step = b1 - b0;
        let mut b2 = b1 + step + step;
        if !branch.admits(b2) {
            b2 = b1 * lit(0.5);
        }
        b0 = b1;
        g0 = g1;
        b1 = b2;
        let (gn, mun) = g(b1, &mut omega, &mut picard)?;
        g1 = gn;
        mu_last = mun;
    }
    // keep lo/hi ordered
    let (mut lo, mut glo, mut hi, mut ghi) = if b0 < b1 { (b0, g0, b1, g1) } else { (b1, g1, b0, g0) };
    let mut beta = b1;
    let mut side = 0i8;
    let mut outer = 0;
    while (hi - lo) > opts.tol && glo != T::zero() && ghi != T::zero() {
        outer += 1;
        if outer > opts.max_outer {
            return Err(Error::BracketFailure {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        let mut c = (lo * ghi - hi * glo) / (ghi - glo);
        if !(c > lo && c < hi) {
            c = (lo + hi) * lit(0.5);
        }
        let (gc, muc) = g(c, &mut omega, &mut picard)?;
        beta = c;
        mu_last = muc;
        if gc == T::zero() {
            break;
        }
        if (gc > T::zero()) == (glo > T::zero()) {
            lo = c;
            glo = gc;
            if side == 1 {
                ghi = ghi * lit(0.5);
            }
            side = 1;
        } else {
            hi = c;
            ghi = gc;
            if side == -1 {
                glo = glo * lit(0.5);
            }
            side = -1;
        }
        // secant steps far inside a tiny bracket: the remaining error is below tol
        if gc.abs() <= opts.tol * lit(1e-3) * params.eigen_factor(c).abs() {
            break;
        }
    }
    if outer == 0 {
        beta = if glo == T::zero() { lo } else if ghi == T::zero() { hi } else { b1 };
    }
    let residual = evaluate_residual(space, params, beta, &omega)?;
    let field = DiscreteField::new(space.clone(), omega)?;
    Ok(NonlinearSolution {
        eigenpair: Eigenpair {
            beta,
            omega: Profile::Mesh(field),
            branch,
            residual_norm: residual,
            iterations: picard.iterations,
        },
        mu: mu_last,
        eps,
        bracket: (lo, hi),
        picard_iterations: picard.iterations,
        outer_evaluations: evaluations,
        clipped: picard.clipped,
    })
}
