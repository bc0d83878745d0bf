//! Acceptance checks. Each criterion prints one PASS or FAIL line with the
//! measured quantities; the process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use spheig::cone::{
    approximation_pair, band_refinement, contraction_check, decay_exponent, deformation_family, sandwich_check,
    tau_lipschitz_check, ConeDomain, ConeField, ConeGrid, ConeOptions,
};
use spheig::exponent::{exponent_bracket, ExponentOptions};
use spheig::fem::{evaluate_residual, solve_nonlinear, IntervalMesh, P1Space, SurfaceMesh};
use spheig::ode::solve_beta;
use spheig::verify::{run_suite, SuiteOptions};
use spheig::{Branch, DomainFamily, PParams, Result, SphericalDomain};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn meridian(alpha: f64, n: usize, dim: usize) -> Result<Arc<P1Space<f64>>> {
    Ok(Arc::new(IntervalMesh::uniform(alpha, n, dim)?.space()?))
}

fn sector_exponents() -> Result<Outcome> {
    let params = PParams::new(2.0, 2)?;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut passed = true;
    for alpha in [PI / 4.0, PI / 2.0, PI, 1.5 * PI] {
        let start = Instant::now();
        let dom = SphericalDomain::arc(alpha)?;
        let space = meridian(alpha, 800, 2)?;
        for (branch, want) in [(Branch::Singular, PI / alpha), (Branch::Regular, -PI / alpha)] {
            let ode = (solve_beta(&params, &dom, branch, 1e-12)?.beta - want).abs();
            let fem = (solve_nonlinear(&space, &params, branch, 1e-10)?.beta - want).abs();
            worst = (worst.0.max(ode), worst.1.max(fem), worst.2);
            passed &= ode <= 1e-8 && fem <= 1e-4;
        }
        let secs = start.elapsed().as_secs_f64();
        worst.2 = worst.2.max(secs);
        passed &= secs < 1.0;
    }
    outcome(
        passed,
        format!("shooting error {:.1e}, FEM error {:.1e}, slowest opening {:.2} s", worst.0, worst.1, worst.2),
    )
}

fn half_space_regular() -> Result<Outcome> {
    let cap = SphericalDomain::cap(PI / 2.0, 3)?;
    let spaces: Vec<_> = [8, 16, 32]
        .iter()
        .map(|&rings| Ok(Arc::new(SurfaceMesh::cap(PI / 2.0, rings)?.space()?)))
        .collect::<Result<_>>()?;
    let linear: Vec<Vec<f64>> = spaces
        .iter()
        .map(|s| {
            s.coords()
                .iter()
                .zip(s.boundary())
                .map(|(x, &b)| if b { 0.0 } else { x[2] })
                .collect()
        })
        .collect();
    let (mut worst_beta, mut worst_scaled) = (0.0f64, 0.0f64);
    let mut passed = true;
    for p in [1.2, 1.5, 2.0, 2.5, 3.0, 4.0] {
        let params = PParams::new(p, 3)?;
        let err = (solve_beta(&params, &cap, Branch::Regular, 1e-12)?.beta + 1.0).abs();
        worst_beta = worst_beta.max(err);
        let scaled: Vec<f64> = spaces
            .iter()
            .zip(&linear)
            .map(|(s, w)| Ok(evaluate_residual(s, &params, -1.0, w)? / (s.h() * s.h())))
            .collect::<Result<_>>()?;
        worst_scaled = worst_scaled.max(scaled[2]);
        // residual/h² bounded and not growing under refinement
        passed &= err <= 1e-7 && scaled[2] <= 1.1 * scaled[1] && scaled[1] <= 1.1 * scaled[0];
    }
    outcome(passed, format!("|beta' + 1| <= {worst_beta:.1e}, finest residual/h^2 <= {worst_scaled:.3}"))
}

fn hemisphere_singular() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in [3, 4, 5] {
        let params = PParams::new(2.0, n)?;
        let beta = solve_beta(&params, &SphericalDomain::cap(PI / 2.0, n)?, Branch::Singular, 1e-12)?.beta;
        worst = worst.max((beta - (n as f64 - 1.0)).abs());
    }
    outcome(worst <= 1e-7, format!("|beta - (N-1)| <= {worst:.1e} for N = 3, 4, 5"))
}

fn bracket() -> Result<Outcome> {
    let start = Instant::now();
    let cap = SphericalDomain::cap(PI / 2.0, 3)?;
    let steps = DomainFamily::dyadic_steps(0.2, 7);
    let mut parts = Vec::new();
    let mut passed = true;
    for p in [1.5, 2.5] {
        let params = PParams::new(p, 3)?;
        let b = exponent_bracket(&cap, &params, Branch::Singular, &steps, &ExponentOptions::with_tol(1e-10))?;
        let inner_ok = b.beta_inner.windows(2).all(|w| w[1] <= w[0] + 1e-10);
        let outer_ok = b.beta_outer.windows(2).all(|w| w[1] >= w[0] - 1e-10);
        passed &= inner_ok && outer_ok && b.gap.abs() <= 5e-3;
        parts.push(format!("p={p}: limit gap {:.1e}, gap at k=6 {:.1e}", b.gap, b.final_gap()));
    }
    let secs = start.elapsed().as_secs_f64();
    passed &= secs < 30.0;
    outcome(passed, format!("{}, {secs:.1} s", parts.join("; ")))
}

fn cross_solver() -> Result<Outcome> {
    let alpha = 0.4 * PI;
    let params = PParams::new(2.5, 3)?;
    let oracle = solve_beta(&params, &SphericalDomain::cap(alpha, 3)?, Branch::Singular, 1e-12)?.beta;
    let errors: Vec<f64> = [50, 100, 200]
        .iter()
        .map(|&n| Ok((solve_nonlinear(&meridian(alpha, n, 3)?, &params, Branch::Singular, 1e-11)?.beta - oracle).abs()))
        .collect::<Result<_>>()?;
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let rel = errors[2] / oracle;
    outcome(
        rel <= 5e-4 && orders.iter().all(|&o| o >= 1.0),
        format!("beta = {oracle:.6}, relative errors {:.1e} {:.1e} {:.1e}, orders {:.2} {:.2}", errors[0] / oracle, errors[1] / oracle, rel, orders[0], orders[1]),
    )
}

/// Decay solves of criterion 6, kept for the band refinement.
struct DecayCase {
    label: &'static str,
    coarse: ConeField<f64>,
    profile: Box<dyn Fn(f64) -> f64>,
    theta0: f64,
}

fn decay_cases() -> Result<(Outcome, Vec<DecayCase>)> {
    let start = Instant::now();
    let mut cases = Vec::new();
    let mut parts = Vec::new();
    let mut passed = true;
    for (label, alpha, p, n) in [("arc(pi/2) p=2", PI / 2.0, 2.0, 32), ("arc(3pi/2) p=3", 1.5 * PI, 3.0, 64)] {
        let params = PParams::new(p, 2)?;
        let dom = SphericalDomain::arc(alpha)?;
        let pair = solve_beta(&params, &dom, Branch::Singular, 1e-12)?;
        let omega = pair.omega.as_colat().expect("shooting profile").clone();
        let peak = omega.sup_norm();
        let profile: Box<dyn Fn(f64) -> f64> = Box::new(move |t| omega.eval(t) / peak);
        let grid = Arc::new(ConeGrid::new(ConeDomain::new(dom, 1.0, 256.0)?, params, n)?);
        let inner = grid.sample_profile(&profile);
        let d = decay_exponent(&grid, &inner, alpha / 2.0, &ConeOptions::default())?;
        let rel = (d.fit.beta_fit - pair.beta).abs() / pair.beta;
        passed &= rel <= 0.02;
        parts.push(format!("{label}: beta_fit {:.5} vs {:.5} ({rel:.1e})", d.fit.beta_fit, pair.beta));
        cases.push(DecayCase { label, coarse: d.field, profile, theta0: alpha / 2.0 });
    }
    let secs = start.elapsed().as_secs_f64();
    passed &= secs < 60.0;
    Ok((Outcome { passed, detail: format!("{}, {secs:.1} s", parts.join("; ")) }, cases))
}

fn deformation_diagnostics() -> Result<Outcome> {
    let params = PParams::new(2.5, 2)?;
    let cone = ConeDomain::new(SphericalDomain::arc(PI / 2.0)?, 1.0, 256.0)?;
    let grid = Arc::new(ConeGrid::new(cone, params, 32)?);
    let pair = approximation_pair(&grid, Branch::Singular, 0.2 / 64.0, 1e-11)?;
    let taus: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    let family = deformation_family(&grid, pair.beta, &pair.omega, &pair.omega_prime, &taus, &ConeOptions::default())?;
    let sandwich = (0..taus.len())
        .map(|k| sandwich_check(&family, k, 16.0))
        .collect::<Result<Vec<_>>>()?;
    let worst = sandwich.iter().fold(0.0f64, |m, s| m.max(s.max_violation));
    let lip = tau_lipschitz_check(&family, 1e-8);
    let c = contraction_check(&family, family.pair_near(0.5))?;
    let passed = sandwich.iter().all(|s| s.passed) && lip.passed && c.passed && c.monotone && c.shells.len() >= 4;
    outcome(
        passed,
        format!(
            "delta1 {:.5}, sandwich {worst:.1e} <= {:.1e}, Lipschitz violations {}, {} shells, theta {:.3} <= {:.3} (c_hat {:.3})",
            family.delta1,
            sandwich[0].allowed,
            lip.violations,
            c.shells.len(),
            c.theta_fit,
            c.bound,
            c.c_hat
        ),
    )
}

fn property_suites() -> Result<Outcome> {
    let report = run_suite(&SuiteOptions { seed: 1, trials: 10_000, only: None })?;
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let violations: usize = report.checks.iter().map(|c| c.violations).sum();
    outcome(
        failed.is_empty(),
        format!("{} checks, {violations} violations{}", report.checks.len(), if failed.is_empty() { String::new() } else { format!(", failing: {}", failed.join(", ")) }),
    )
}

fn band(cases: &[DecayCase]) -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut passed = true;
    for case in cases {
        let gc = case.coarse.grid();
        let fine = Arc::new(ConeGrid::with_counts(gc.cone().clone(), *gc.params(), 2 * (gc.n_rows() - 1), 2 * (gc.n_cols() - 1))?);
        let inner = fine.sample_profile(&case.profile);
        let f = decay_exponent(&fine, &inner, case.theta0, &ConeOptions::default())?;
        let r = band_refinement(&case.coarse, &f.field, 0.2, 50.0)?;
        passed &= r.stable;
        parts.push(format!("{}: {:.4} -> {:.4} on shared nodes", case.label, r.coarse.ratio, r.fine_common.ratio));
    }
    outcome(passed, parts.join("; "))
}

fn main() {
    let mut all = true;
    let mut report = |id: usize, name: &str, result: Result<Outcome>| {
        let (passed, detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= passed;
        println!("{} {id} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    };
    report(1, "sector exponents", sector_exponents());
    report(2, "half-space regular exponent", half_space_regular());
    report(3, "hemisphere singular exponent", hemisphere_singular());
    report(4, "inner/outer bracket", bracket());
    report(5, "shooting vs finite elements", cross_solver());
    let cases = match decay_cases() {
        Ok((o, cases)) => {
            report(6, "cone decay", Ok(o));
            cases
        }
        Err(e) => {
            report(6, "cone decay", Err(e));
            Vec::new()
        }
    };
    report(7, "deformation diagnostics", deformation_diagnostics());
    report(8, "property suites", property_suites());
    report(9, "band refinement", if cases.is_empty() { Err(spheig::Error::ConfigError("no decay fields".into())) } else { band(&cases) });
    if !all {
        std::process::exit(1);
    }
}
