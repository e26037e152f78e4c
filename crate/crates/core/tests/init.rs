mod common;

use common::increment_exponent;
use euler_stat::init::{
    bspline, fbm_surface, flat_sheet_profile, generate, perturbation, sinusoidal_sheet_vorticity, Family,
    InitialMeasureSpec, PerturbationDraw,
};
use euler_stat::rng::stream_rng;
use euler_stat::ScalarSpectralField;
use proptest::prelude::*;

fn check_invariants(spec: &InitialMeasureSpec, index: u64) -> Result<(), TestCaseError> {
    let u = generate(spec, index).unwrap();
    prop_assert_eq!(u.hermitian_defect(), 0.0);
    prop_assert_eq!(u.coeff(0, 0), [num_complex::Complex64::new(0.0, 0.0); 2]);
    prop_assert!(u.max_divergence() <= 1e-12 * (1.0 + u.l2_norm()));
    prop_assert_eq!(generate(spec, index).unwrap(), u);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn perturbation_is_bounded(seed in any::<u64>(), q in 1usize..20, delta in 0.0f64..0.1, x in 0.0f64..1.0) {
        let draw = PerturbationDraw::for_seed(seed, q, delta);
        let sum: f64 = draw.alphas.iter().sum();
        prop_assert!(sum <= q as f64 * delta);
        prop_assert!(perturbation(&draw, x).abs() <= sum + 1e-15);
        prop_assert!(draw.betas.iter().all(|b| (0.0..std::f64::consts::TAU).contains(b)));
    }

    #[test]
    fn flat_sheet_invariants(n in 4usize..16, rho in 0.0f64..0.2, delta in 0.0f64..0.05, base in any::<u64>(), index in 0u64..100) {
        let mut spec = InitialMeasureSpec::flat_sheet(n, rho, delta);
        spec.base_seed = base;
        check_invariants(&spec, index)?;
    }

    #[test]
    fn fbm_invariants(n in 4usize..16, hurst in 0.1f64..0.9, base in any::<u64>(), index in 0u64..100) {
        let mut spec = InitialMeasureSpec::fbm(n, hurst);
        spec.base_seed = base;
        check_invariants(&spec, index)?;
    }

    #[test]
    fn bspline_vanishes_outside_unit_disk(r in 1.0f64..10.0) {
        prop_assert!(bspline(r).abs() < 1e-12);
    }
}

#[test]
fn sinusoidal_sheet_invariants() {
    let mut spec = InitialMeasureSpec::sinusoidal_sheet(16, 0.003125);
    spec.quad_points = 40;
    for index in 0..3 {
        let u = generate(&spec, index).unwrap();
        assert!(u.max_divergence() <= 1e-10 * u.l2_norm());
        assert!(u.vorticity().mean().abs() <= 1e-10);
    }
    let omega = sinusoidal_sheet_vorticity(48, 5.0 / 16.0, 0.2, 40);
    let w = ScalarSpectralField::from_physical(&omega, 16).unwrap();
    assert!(w.mean().abs() > 0.5, "sheet vorticity carries a mean before removal");
}

#[test]
fn bspline_endpoint_and_profiles() {
    assert!(bspline(1.0).abs() < 1e-12);
    assert!(bspline(0.0) > 0.0);
    assert_eq!(flat_sheet_profile(0.25, 0.1), 0.0);
    assert_eq!(flat_sheet_profile(0.5, 0.0), 1.0);
    assert_eq!(flat_sheet_profile(0.75, 0.0), 1.0);
    assert_eq!(flat_sheet_profile(0.76, 0.0), -1.0);
    assert_eq!(flat_sheet_profile(0.25, 0.0), -1.0);
}

#[test]
fn perturbation_effect_shrinks_with_delta() {
    for family in [Family::FlatSheet, Family::SinusoidalSheet] {
        let base = match family {
            Family::FlatSheet => InitialMeasureSpec::flat_sheet(16, 0.1, 0.0),
            _ => InitialMeasureSpec { quad_points: 40, ..InitialMeasureSpec::sinusoidal_sheet(16, 0.0) },
        };
        let u0 = generate(&base, 3).unwrap();
        let dist: Vec<f64> = [0.05, 0.025, 0.0125]
            .iter()
            .map(|&delta| (&generate(&InitialMeasureSpec { delta, ..base.clone() }, 3).unwrap() - &u0).l2_norm())
            .collect();
        assert!(dist[0] > dist[1] && dist[1] > dist[2] && dist[2] > 0.0, "{family:?}: {dist:?}");
    }
}

#[test]
fn draws_do_not_depend_on_resolution() {
    let spec = InitialMeasureSpec::flat_sheet(16, 0.1, 0.025);
    let coarse = generate(&spec, 5).unwrap();
    let fine = generate(&spec.at_resolution(32), 5).unwrap();
    let other = generate(&spec, 6).unwrap();
    let d_same = (&fine.truncate_to(16).unwrap() - &coarse).l2_norm();
    let d_other = (&other - &coarse).l2_norm();
    assert!(d_same < 0.05 * d_other, "{d_same} vs {d_other}");
}

#[test]
fn fbm_exponent_orders_with_hurst_index() {
    let lags: Vec<usize> = (0..5).map(|i| 1 << i).collect();
    let slopes: Vec<f64> = [0.15, 0.5, 0.75]
        .iter()
        .map(|&h| {
            let surfaces: Vec<Vec<f64>> = (0..8).map(|s| fbm_surface(&mut stream_rng(s, 1), 7, h)).collect();
            increment_exponent(&surfaces, 128, &lags)
        })
        .collect();
    assert!(slopes[0] < slopes[1] && slopes[1] < slopes[2], "{slopes:?}");
    assert!((slopes[1] - 1.0).abs() < 0.1, "{slopes:?}");
}
