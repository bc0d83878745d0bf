use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::fem::{solve_nonlinear, IntervalMesh};
use crate::geometry::GeodesicPolygon;
use crate::ode::shoot;

fn steps(count: usize) -> Vec<f64> {
    DomainFamily::dyadic_steps(0.2, count)
}

fn opts() -> ExponentOptions<f64> {
    ExponentOptions::with_tol(1e-10)
}

#[test]
fn richardson_recovers_polynomial_limits() {
    let first: Vec<f64> = (0..6).map(|k| 3.0 + 0.7 * 0.5f64.powi(k)).collect();
    let e = richardson(&first);
    assert!((e.value - 3.0).abs() < 1e-12, "{e:?}");
    assert!((e.order.unwrap() - 1.0).abs() < 1e-9);
    let mixed: Vec<f64> = (0..7)
        .map(|k| {
            let d = 0.2 * 0.5f64.powi(k);
            1.0 - 2.0 * d + 5.0 * d * d - 3.0 * d * d * d
        })
        .collect();
    let e = richardson(&mixed);
    let raw = (mixed[6] - 1.0).abs();
    assert!((e.value - 1.0).abs() < 1e-2 * raw, "{e:?}");
    assert!(e.error >= (e.value - 1.0).abs());
    // noisy data falls back to the last value
    let e = richardson(&[1.0, 1.1, 1.0]);
    assert_eq!(e.value, 1.0);
    assert_eq!(e.order, None);
}

#[test]
fn half_circle_families_have_closed_forms() {
    let p = PParams::new(2.0, 2).unwrap();
    let arc = SphericalDomain::arc(PI).unwrap();
    let inner = approximate_from_inside(&arc, &p, Branch::Singular, &steps(6), &opts()).unwrap();
    let outer = approximate_from_outside(&arc, &p, Branch::Singular, &steps(6), &opts()).unwrap();
    for (k, &d) in inner.steps.iter().enumerate() {
        assert!((inner.betas[k] - PI / (PI - 2.0 * d)).abs() < 1e-8);
        assert!((outer.betas[k] - PI / (PI + 2.0 * d)).abs() < 1e-8);
    }
    assert!((inner.limit.value - 1.0).abs() < 1e-6, "{:?}", inner.limit);
    assert!((outer.limit.value - 1.0).abs() < 1e-6, "{:?}", outer.limit);
}

#[test]
fn hemisphere_inner_family_decreases_to_two() {
    let p = PParams::new(2.0, 3).unwrap();
    let cap = SphericalDomain::cap(PI / 2.0, 3).unwrap();
    let inner = approximate_from_inside(&cap, &p, Branch::Singular, &steps(6), &opts()).unwrap();
    assert!(inner.betas.windows(2).all(|w| w[1] <= w[0]));
    assert!(inner.betas.iter().all(|&b| b > 2.0));
    assert!((inner.limit.value - 2.0).abs() < 1e-5, "{:?}", inner.limit);
}

#[test]
fn outer_caps_increase_toward_cap_exponent() {
    let p = PParams::new(2.0, 3).unwrap();
    let cap = SphericalDomain::cap(PI / 3.0, 3).unwrap();
    let oracle = solve_beta(&p, &cap, Branch::Singular, 1e-11).unwrap().beta;
    let outer = approximate_from_outside(&cap, &p, Branch::Singular, &steps(6), &opts()).unwrap();
    assert!(outer.betas.windows(2).all(|w| w[1] >= w[0]));
    assert!(outer.betas.iter().all(|&b| b < oracle));
    assert!((outer.limit.value - oracle).abs() < 1e-4, "{:?} vs {oracle}", outer.limit);
}

#[test]
fn regular_outer_family_approaches_half_space_exponent() {
    // larger caps flatten the regular solution, so |beta| grows back to 1
    let p = PParams::new(3.0, 3).unwrap();
    let cap = SphericalDomain::cap(PI / 2.0, 3).unwrap();
    let outer = approximate_from_outside(&cap, &p, Branch::Regular, &steps(7), &opts()).unwrap();
    assert!(outer.betas.iter().all(|&b| b > -1.0 && b < 0.0));
    assert!(outer.betas.windows(2).all(|w| w[1] <= w[0]));
    assert!((outer.limit.value + 1.0).abs() < 1e-6, "{:?}", outer.limit);
}

#[test]
fn quarter_arc_bracket_closes() {
    let p = PParams::new(2.0, 2).unwrap();
    let arc = SphericalDomain::arc(PI / 2.0).unwrap();
    let coarse = exponent_bracket(&arc, &p, Branch::Singular, &steps(3), &opts()).unwrap();
    let fine = exponent_bracket(&arc, &p, Branch::Singular, &steps(6), &opts()).unwrap();
    assert!(fine.final_gap() < coarse.final_gap());
    assert!((fine.beta_in_limit - 2.0).abs() < 1e-5);
    assert!((fine.beta_out_limit - 2.0).abs() < 1e-5);
    assert!(fine.gap.abs() < 1e-5);
    let csv = fine.to_csv();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("k,delta,beta_inner,beta_outer"));
}

#[test]
fn sublinear_hemisphere_bracket() {
    let p = PParams::new(1.5, 3).unwrap();
    let cap = SphericalDomain::cap(PI / 2.0, 3).unwrap();
    let b = exponent_bracket(&cap, &p, Branch::Singular, &steps(7), &opts()).unwrap();
    assert!(b.gap.abs() < 5e-3, "limit gap {}", b.gap);
    // the raw gap at the finest margin shrinks linearly with the margin
    let coarse = exponent_bracket(&cap, &p, Branch::Singular, &steps(6), &opts()).unwrap();
    let ratio = coarse.final_gap() / b.final_gap();
    assert!((ratio - 2.0).abs() < 0.1, "gap ratio {ratio}");
    // every outer exponent sits below every inner one
    let top = b.beta_outer.iter().copied().fold(f64::MIN, f64::max);
    let bottom = b.beta_inner.iter().copied().fold(f64::MAX, f64::min);
    assert!(top <= bottom);
}

#[test]
fn regular_bracket_limits() {
    let cap = SphericalDomain::cap(PI / 2.0, 3).unwrap();
    for pv in [1.5, 2.0, 4.0] {
        let p = PParams::new(pv, 3).unwrap();
        let b = exponent_bracket(&cap, &p, Branch::Regular, &steps(7), &opts()).unwrap();
        assert!((b.beta_in_limit + 1.0).abs() < 1e-6, "p {pv}: {:?}", b.inner_limit);
        assert!((b.beta_out_limit + 1.0).abs() < 1e-6, "p {pv}: {:?}", b.outer_limit);
    }
}

#[test]
fn limits_are_maximal_exponents() {
    let p = PParams::new(2.5, 3).unwrap();
    let alpha = 0.4 * PI;
    let cap = SphericalDomain::cap(alpha, 3).unwrap();
    let b = exponent_bracket(&cap, &p, Branch::Singular, &steps(6), &opts()).unwrap();
    let above = shoot(&p, b.beta_in_limit * 1.01, alpha).unwrap();
    assert!(above.first_zero < alpha);
    let below = shoot(&p, b.beta_out_limit * 0.99, alpha).unwrap();
    assert!(below.first_zero > alpha);
}

#[test]
fn square_inner_family_limit_matches_direct_solve() {
    let p = PParams::new(2.5, 3).unwrap();
    let square = SphericalDomain::Polygon(GeodesicPolygon::square(1.0).unwrap());
    let o = ExponentOptions::<f64> {
        tol: 1e-9,
        polygon_levels: 3,
    };
    let family = DomainFamily::dyadic_steps(0.05, 6);
    let inner = approximate_from_inside(&square, &p, Branch::Singular, &family, &o).unwrap();
    assert!(inner.betas.windows(2).all(|w| w[1] <= w[0]), "{:?}", inner.betas);
    let direct = solve_exponent(&p, &square, Branch::Singular, &o).unwrap().beta;
    assert!((inner.limit.value - direct).abs() < 1e-3, "{:?} vs {direct}", inner.limit);
}

#[test]
fn monotonicity_check_reports_offending_index() {
    let err = check_monotone(FamilyDirection::Inner, &[3.0, 2.0, 2.5], 1e-6).unwrap_err();
    assert!(matches!(err, Error::MonotonicityViolation { index: 2, .. }), "{err}");
    assert!(check_monotone(FamilyDirection::Outer, &[-1.2, -1.1], 1e-6).is_err());
    assert!(check_monotone(FamilyDirection::Outer, &[-1.1, -1.2], 1e-6).is_ok());
}

fn grid_profile(f: impl Fn(f64) -> f64) -> Profile<f64> {
    Profile::Colat(ColatGrid::from_fn(PI, 64, |t| (f(t), 0.0)).unwrap())
}

#[test]
fn proportional_profiles_have_no_oscillation() {
    let w = grid_profile(f64::sin);
    let d = proportionality_diagnostic(&w, &grid_profile(|t| 2.0 * t.sin())).unwrap();
    assert!(d.osc_log_ratio.abs() < 1e-14);
    assert!((d.comparability_constant - 1.0).abs() < 1e-14);
    assert!((d.scale - 0.5).abs() < 1e-14);
}

#[test]
fn power_deformation_oscillation_is_exact() {
    let w = grid_profile(|t| t.sin() + 0.1);
    let eta = grid_profile(|t| (t.sin() + 0.1).powf(1.2));
    let d = proportionality_diagnostic(&w, &eta).unwrap();
    let logs: Vec<f64> = (1..64).map(|i| (PI * i as f64 / 64.0).sin() + 0.1).map(f64::ln).collect();
    let spread = logs.iter().copied().fold(f64::MIN, f64::max) - logs.iter().copied().fold(f64::MAX, f64::min);
    assert!((d.osc_log_ratio - 0.2 * spread).abs() < 1e-12);
    // ln(w/η) = -0.2 ln w is Lipschitz on the samples
    assert!(d.holder_exponent > 0.5 && d.holder_constant.is_finite());
}

#[test]
fn nonpositive_samples_are_rejected() {
    let w = grid_profile(f64::sin);
    let bad = grid_profile(|t| t.sin() - 0.5);
    assert!(matches!(proportionality_diagnostic(&w, &bad), Err(Error::PositivityError { .. })));
}

#[test]
fn mesh_resolutions_agree_increasingly() {
    // eigenfunctions at two resolutions, compared on the coarse nodes
    let p = PParams::new(2.5, 3).unwrap();
    let solve = |n: usize| {
        let s = Arc::new(IntervalMesh::uniform(0.4 * PI, n, 3).unwrap().space().unwrap());
        solve_nonlinear(&s, &p, Branch::Singular, 1e-11).unwrap()
    };
    let restrict = |fine: &Eigenpair<f64>, coarse: &Eigenpair<f64>, ratio: usize| {
        let field = coarse.omega.as_field().unwrap();
        let values: Vec<f64> = (0..field.values().len())
            .map(|i| fine.omega.as_field().unwrap().values()[ratio * i])
            .collect();
        Profile::Mesh(crate::fem::DiscreteField::new(field.space().clone(), values).unwrap())
    };
    let (a, b, c) = (solve(40), solve(80), solve(160));
    let d1 = proportionality_diagnostic(&a.omega, &restrict(&b, &a, 2)).unwrap();
    let d2 = proportionality_diagnostic(&a.omega, &restrict(&c, &a, 4)).unwrap();
    let d3 = proportionality_diagnostic(&restrict(&b, &a, 2), &restrict(&c, &a, 4)).unwrap();
    assert!(d3.osc_log_ratio < 0.5 * d1.osc_log_ratio, "{} vs {}", d3.osc_log_ratio, d1.osc_log_ratio);
    assert!(d2.osc_log_ratio < 2.0 * d1.osc_log_ratio);
}

#[test]
fn pullback_maps_profiles_onto_the_base_interval() {
    let g = ColatGrid::from_fn(2.0, 200, |t| ((PI * t / 2.0).sin(), PI / 2.0 * (PI * t / 2.0).cos())).unwrap();
    let h = pullback(&g, 1.0, 50).unwrap();
    for (&t, &v) in h.nodes().iter().zip(h.values()) {
        assert!((v - (PI * t).sin()).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn diagnostic_is_invariant_under_scaling(a in 0.01f64..100.0, b in 0.01f64..100.0) {
        let w = grid_profile(|t| t.sin() + 0.05 * t);
        let v = grid_profile(|t| (t.sin() + 0.05 * t).powf(1.3) * (1.0 + 0.1 * t));
        let base = proportionality_diagnostic(&w, &v).unwrap();
        let scaled = proportionality_diagnostic(&grid_profile(|t| a * (t.sin() + 0.05 * t)), &grid_profile(|t| b * (t.sin() + 0.05 * t).powf(1.3) * (1.0 + 0.1 * t))).unwrap();
        prop_assert!((base.osc_log_ratio - scaled.osc_log_ratio).abs() < 1e-12);
    }

    #[test]
    fn inner_outer_sandwich(alpha in 0.6f64..2.4, pv in 1.3f64..3.5) {
        let p = PParams::new(pv, 3).unwrap();
        let cap = SphericalDomain::cap(alpha, 3).unwrap();
        let b = exponent_bracket(&cap, &p, Branch::Singular, &DomainFamily::dyadic_steps(0.1, 4), &ExponentOptions::with_tol(1e-9)).unwrap();
        let top = b.beta_outer.iter().copied().fold(f64::MIN, f64::max);
        let bottom = b.beta_inner.iter().copied().fold(f64::MAX, f64::min);
        prop_assert!(top <= bottom + 1e-9);
    }
}
