use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;

/// Fixed step classical RK4 on the same equation, written out separately.
fn rk4_first_zero(p: f64, dim: usize, beta: f64, steps: usize, theta_end: f64) -> f64 {
    let b0 = (dim as f64 - p) / (p - 1.0);
    let lam = (p - 1.0) * beta * (beta - b0);
    let f = |t: f64, y: [f64; 2]| -> [f64; 2] {
        let (w, d) = (y[0], y[1]);
        let q = beta * beta * w * w + d * d;
        let cot = if dim >= 3 { (dim as f64 - 2.0) * t.cos() / t.sin() } else { 0.0 };
        let wpp = -((p - 2.0) * beta * beta * w * d * d + q * (cot * d + lam * w))
            / (beta * beta * w * w + (p - 1.0) * d * d);
        [d, wpp]
    };
    let step = |t: f64, y: [f64; 2], h: f64| -> [f64; 2] {
        let add = |a: [f64; 2], k: [f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, add(y, k1, h / 2.0));
        let k3 = f(t + h / 2.0, add(y, k2, h / 2.0));
        let k4 = f(t + h, add(y, k3, h));
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    let (mut t, mut y) = if dim >= 3 {
        let t0 = 1e-6;
        let c2 = -lam / (2.0 * (dim as f64 - 1.0));
        (t0, [1.0 + c2 * t0 * t0, 2.0 * c2 * t0])
    } else {
        (0.0, [0.0, 1.0])
    };
    let h = (theta_end - t) / steps as f64;
    for _ in 0..steps {
        let next = step(t, y, h);
        if y[0] > 0.0 && next[0] <= 0.0 {
            // secant on the length of the final step
            let (mut a, mut b) = (0.0, h);
            let (mut fa, mut fb) = (y[0], next[0]);
            for _ in 0..60 {
                let c = b - fb * (b - a) / (fb - fa);
                let fc = step(t, y, c)[0];
                a = b;
                fa = fb;
                b = c;
                fb = fc;
                if fc.abs() < 1e-17 || (b - a).abs() < 1e-17 {
                    break;
                }
            }
            return t + b;
        }
        t += h;
        y = next;
    }
    f64::INFINITY
}

fn params(p: f64, dim: usize) -> PParams<f64> {
    PParams::new(p, dim).unwrap()
}

#[test]
fn rhs_examples() {
    let (d, dd) = ode_rhs(&params(2.0, 2), 1.0, 0.4, 0.3, -0.2).unwrap();
    assert_eq!(d, -0.2);
    assert!((dd + 0.3).abs() < 1e-15);
    for &t in &[0.2, 0.7, 1.3] {
        let (_, dd) = ode_rhs(&params(2.0, 3), 2.0, t, t.cos(), -t.sin()).unwrap();
        assert!((dd + t.cos()).abs() < 1e-13, "theta {t}");
    }
}

/// Checks `(sin^{N-2} q^{(p-2)/2} w')' = -λ sin^{N-2} q^{(p-2)/2} w` by
/// finite differencing the flux along the local Taylor expansion.
fn flux_balance(p: f64, dim: usize, beta: f64, theta: f64, w: f64, d: f64) -> (f64, f64) {
    let pr = params(p, dim);
    let (_, dd) = ode_rhs(&pr, beta, theta, w, d).unwrap();
    let m = (p - 2.0) / 2.0;
    let sinpow = |t: f64| if dim >= 3 { t.sin().powi(dim as i32 - 2) } else { 1.0 };
    let flux = |s: f64| {
        let ws = w + d * s + 0.5 * dd * s * s;
        let ds = d + dd * s;
        sinpow(theta + s) * (beta * beta * ws * ws + ds * ds).powf(m) * ds
    };
    let h = 1e-5;
    let lhs = (flux(h) - flux(-h)) / (2.0 * h);
    let rhs = -pr.eigen_factor(beta) * sinpow(theta) * (beta * beta * w * w + d * d).powf(m) * w;
    (lhs, rhs)
}

#[test]
fn rhs_matches_flux_form() {
    let (lhs, rhs) = flux_balance(3.0, 2, 1.0, 0.3, 1.0, 0.0);
    assert!((lhs - rhs).abs() < 1e-8, "{lhs} {rhs}");
    assert!((ode_rhs(&params(3.0, 2), 1.0, 0.3, 1.0, 0.0).unwrap().1 + 3.0).abs() < 1e-14);
    for &(p, dim, beta, theta, w, d) in &[
        (3.0, 2, 1.0, 0.5, 0.7, 0.4),
        (1.5, 3, 1.7, 0.9, 0.6, -0.8),
        (2.5, 4, -0.8, 1.1, 0.3, -1.2),
        (4.0, 3, 2.2, 0.4, 0.9, -0.1),
    ] {
        let (lhs, rhs) = flux_balance(p, dim, beta, theta, w, d);
        assert!((lhs - rhs).abs() < 1e-7 * (1.0 + rhs.abs()), "p {p} N {dim}: {lhs} vs {rhs}");
    }
}

#[test]
fn degenerate_weight_is_reported() {
    assert!(matches!(
        ode_rhs(&params(1.5, 2), 1.0, 0.3, 0.0, 0.0),
        Err(Error::DegenerateWeight { .. })
    ));
    assert_eq!(ode_rhs(&params(3.0, 2), 1.0, 0.3, 0.0, 0.0).unwrap(), (0.0, 0.0));
}

#[test]
fn shoot_closed_forms() {
    let r = shoot(&params(2.0, 2), 1.0, 3.0).unwrap();
    assert!((r.first_zero - PI).abs() < 1e-10, "{}", r.first_zero);
    let traj = &r.trajectory;
    for (t, v) in traj.nodes().iter().zip(traj.values()) {
        assert!((v - t.sin()).abs() < 1e-10);
    }
    let r = shoot(&params(2.0, 3), 2.0, 2.0).unwrap();
    assert!((r.first_zero - PI / 2.0).abs() < 1e-10, "{}", r.first_zero);
    assert!((r.endpoint_value - 2.0f64.cos()).abs() < 1e-9);
}

#[test]
fn p3_arc_first_zero_golden() {
    let adaptive = shoot(&params(3.0, 2), 1.0, 3.0).unwrap().first_zero;
    let oracle = rk4_first_zero(3.0, 2, 1.0, 200_000, 2.0 * PI);
    assert!((adaptive - oracle).abs() < 1e-9, "{adaptive} vs {oracle}");
    assert!((adaptive - P3_ARC_FIRST_ZERO).abs() < 1e-9, "{adaptive}");
}

/// First zero of the p = 3, N = 2 profile at β = 1 (frozen from the
/// adaptive and fixed-step integrators above).
const P3_ARC_FIRST_ZERO: f64 = 1.988_606_667_057_668;

#[test]
fn cap_shots_agree_with_fixed_step_oracle() {
    for &(p, dim, beta) in &[(1.5, 3, 4.0), (2.5, 3, 2.0), (3.0, 4, -2.5)] {
        let adaptive = shoot(&params(p, dim), beta, 3.0).unwrap().first_zero;
        assert!(adaptive < 3.0, "p {p}: {adaptive}");
        let oracle = rk4_first_zero(p, dim, beta, 200_000, PI - 1e-6);
        assert!((adaptive - oracle).abs() < 1e-8, "p {p}: {adaptive} vs {oracle}");
    }
}

#[test]
fn solve_beta_closed_forms() {
    let arc = SphericalDomain::arc(PI / 2.0).unwrap();
    let e = solve_beta(&params(2.0, 2), &arc, Branch::Singular, 1e-11).unwrap();
    assert!((e.beta - 2.0).abs() < 1e-8, "{}", e.beta);
    let e = solve_beta(&params(2.0, 2), &arc, Branch::Regular, 1e-11).unwrap();
    assert!((e.beta + 2.0).abs() < 1e-8, "{}", e.beta);

    let half = SphericalDomain::cap(PI / 2.0, 3).unwrap();
    for &p in &[2.0, 3.0] {
        let e = solve_beta(&params(p, 3), &half, Branch::Regular, 1e-11).unwrap();
        assert!((e.beta + 1.0).abs() < 1e-8, "p {p}: {}", e.beta);
        let g = e.omega.as_colat().unwrap();
        // w = cos θ up to normalization: ∫ cos θ dS = π on the hemisphere
        for (t, v) in g.nodes().iter().zip(g.values()) {
            assert!((v - t.cos() / PI).abs() < 1e-7);
        }
    }
}

#[test]
fn solve_beta_normalizes_and_is_positive() {
    let cap = SphericalDomain::cap(1.1, 4).unwrap();
    let pr = params(2.7, 4);
    let e = solve_beta(&pr, &cap, Branch::Singular, 1e-10).unwrap();
    assert!((e.omega.integral_abs(4) - 1.0).abs() < 1e-10);
    assert!(e.omega.min_interior() > 0.0);
    assert!(e.residual_norm < 1e-8);
}

#[test]
fn p3_half_circle_exponent_is_tolerance_independent() {
    let arc = SphericalDomain::arc(PI).unwrap();
    let pr = params(3.0, 2);
    let fine = solve_beta(&pr, &arc, Branch::Singular, 1e-12).unwrap().beta;
    let coarse_opts = BetaOptions {
        shoot: ShootOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ..ShootOptions::default()
        },
        ..BetaOptions::with_tol(1e-10)
    };
    let coarse = solve_beta_with(&pr, &arc, Branch::Singular, &coarse_opts).unwrap().eigenpair.beta;
    assert!((fine - coarse).abs() < 1e-8, "{fine} vs {coarse}");
    assert!((fine - P3_HALF_CIRCLE_BETA).abs() < 1e-8, "{fine}");
}

/// Singular exponent of Arc(π) for p = 3, frozen from the check above.
const P3_HALF_CIRCLE_BETA: f64 = 0.577_350_269_189_629;

#[test]
fn laplace_hemisphere_exponents() {
    for dim in 3..=5 {
        let cap = SphericalDomain::cap(PI / 2.0, dim).unwrap();
        let e = solve_beta(&params(2.0, dim), &cap, Branch::Singular, 1e-11).unwrap();
        assert!((e.beta - (dim as f64 - 1.0)).abs() < 1e-8, "N {dim}: {}", e.beta);
    }
}

#[test]
fn errors_are_reported() {
    let poly = SphericalDomain::polygon(vec![[0.0, 0.0, 1.0], [0.5, 0.0, 0.866_025_403_784_438_6], [0.0, 0.5, 0.866_025_403_784_438_6]])
        .unwrap();
    assert!(matches!(
        solve_beta(&params(2.0, 3), &poly, Branch::Singular, 1e-8),
        Err(Error::InvalidDomain(_))
    ));
    let arc = SphericalDomain::arc(PI / 2.0).unwrap();
    let narrow = BetaOptions {
        scan_min: 1e-3,
        scan_max: 1e-2,
        ..BetaOptions::with_tol(1e-8)
    };
    assert!(matches!(
        solve_beta_with(&params(2.0, 2), &arc, Branch::Singular, &narrow),
        Err(Error::BracketFailure { .. })
    ));
    assert!(solve_beta(&params(2.0, 3), &arc, Branch::Singular, 1e-8).is_err());
}

#[test]
fn single_precision_shoot() {
    let pr = PParams::new(2.0f32, 2).unwrap();
    let r = shoot(&pr, 1.0f32, 3.0).unwrap();
    assert!((r.first_zero - std::f32::consts::PI).abs() < 1e-4, "{}", r.first_zero);
}

#[test]
fn scan_first_zero_decreases() {
    let arc = SphericalDomain::arc(2.0).unwrap();
    let s = solve_beta_with(&params(1.5, 2), &arc, Branch::Singular, &BetaOptions::default()).unwrap();
    let finite: Vec<f64> = s.scan.iter().map(|x| x.1).filter(|z| z.is_finite()).collect();
    assert!(finite.windows(2).all(|w| w[1] < w[0]));
    assert!(s.bracket.0 <= s.eigenpair.beta && s.eigenpair.beta <= s.bracket.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn smaller_caps_have_larger_singular_exponents(p in 1.3f64..3.5, a in 0.4f64..2.6, frac in 0.3f64..0.95) {
        let pr = params(p, 3);
        let big = SphericalDomain::cap(a, 3).unwrap();
        let small = SphericalDomain::cap(a * frac, 3).unwrap();
        let b_big = solve_beta(&pr, &big, Branch::Singular, 1e-9).unwrap().beta;
        let b_small = solve_beta(&pr, &small, Branch::Singular, 1e-9).unwrap().beta;
        prop_assert!(b_small >= b_big - 1e-8);
    }

    #[test]
    fn shorter_arcs_have_larger_singular_exponents(p in 1.3f64..3.5, a in 0.5f64..5.5, frac in 0.3f64..0.95) {
        let pr = params(p, 2);
        let big = SphericalDomain::arc(a).unwrap();
        let small = SphericalDomain::arc(a * frac).unwrap();
        let b_big = solve_beta(&pr, &big, Branch::Singular, 1e-9).unwrap().beta;
        let b_small = solve_beta(&pr, &small, Branch::Singular, 1e-9).unwrap().beta;
        prop_assert!(b_small >= b_big - 1e-8);
    }

    #[test]
    fn p2_arc_exponent_is_pi_over_alpha(a in 0.3f64..6.0) {
        let arc = SphericalDomain::arc(a).unwrap();
        let b = solve_beta(&params(2.0, 2), &arc, Branch::Singular, 1e-11).unwrap().beta;
        prop_assert!((b * a - PI).abs() < 1e-8);
    }
}
