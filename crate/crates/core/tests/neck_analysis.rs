use std::f64::consts::PI;

use proptest::prelude::*;
use willmore_core::axisym::profile::{axisym_metrics, sphere_profile};
use willmore_core::axisym::{isothermal_coordinate, AxisymProfile};
use willmore_core::blowup::*;
use willmore_core::oracle::{half_area_radius, reference_metrics, ReferenceSurface};
use willmore_core::Error;

fn analytic(c: f64) -> AxisymProfile {
    ReferenceSurface::DoubleSphereNeck { c }.profile(2000).unwrap()
}

#[test]
fn analytic_waist_is_found() {
    let p = analytic(1e-3);
    let iso = isothermal_coordinate(&p).unwrap();
    let r = detect_neck(&p, &iso).unwrap();
    assert!((r.lambda - 2e-3).abs() < 1e-6, "{}", r.lambda);
    // the waist sample is the middle of the catenoid piece, at z = 0
    assert_eq!(r.waist_z, 0.0);
    assert!(r.t > 0.0 && r.t < 1.0);
    assert!(r.r > 0.0 && r.r < r.t);
}

#[test]
fn analytic_neck_piece_is_the_unit_catenoid() {
    let p = analytic(1e-3);
    let iso = isothermal_coordinate(&p).unwrap();
    let (report, limits) = analyze_neck(&p, &iso).unwrap();
    // scaled by 1/lambda the waist radius is 1/2
    let q = &limits.neck.profile;
    let rms = (q
        .samples
        .iter()
        .map(|s| (0.5 * (2.0 * s[1]).cosh() / s[0] - 1.0).powi(2))
        .sum::<f64>()
        / q.len() as f64)
        .sqrt();
    assert!(rms < 1e-4, "{rms}");
    let fit = report.fit.unwrap();
    assert!((fit.c - 0.5).abs() < 1e-8 && fit.residual < 1e-8, "{fit:?}");
}

#[test]
fn analytic_energy_identity() {
    let p = analytic(1e-3);
    let iso = isothermal_coordinate(&p).unwrap();
    let r = detect_neck(&p, &iso).unwrap();
    let m = axisym_metrics(&p).unwrap();
    let e = energy_identity(Some(&r), m.total_a2);
    assert!((e.total - 24.0 * PI).abs() < 0.02 * 24.0 * PI, "{}", e.total / PI);
    assert!((e.big_lobe + e.small_lobe + e.neck - e.total).abs() < 1e-10 * e.total);
    // the discrete total tracks the quadrature value of the same construction
    let exact = reference_metrics(&ReferenceSurface::DoubleSphereNeck { c: 1e-3 }).unwrap();
    assert!((m.total_a2 - exact.total_a2).abs() < 1e-2 * exact.total_a2);
    assert!((m.willmore - 8.0 * PI).abs() < 1e-2 * 8.0 * PI);
}

#[test]
fn single_sphere_energy_is_8pi() {
    let p = sphere_profile(half_area_radius(), 4000);
    let iso = isothermal_coordinate(&p).unwrap();
    assert!(matches!(detect_neck(&p, &iso), Err(Error::NoNeck(_))));
    let m = axisym_metrics(&p).unwrap();
    let e = energy_identity(None, m.total_a2);
    assert!((e.total - 8.0 * PI).abs() < 1e-4 * 8.0 * PI);
    assert!(!e.has_neck);
}

#[test]
fn noisy_scaling_data_within_confidence() {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let pts: Vec<ScalingPoint> = (0..8)
        .map(|i| {
            let m = -3.0 - i as f64;
            let mut noise = || 1.0 + 0.05 * rng.random_range(-1.0..1.0);
            ScalingPoint {
                sigma: 0.0,
                lambda: m.exp() * noise(),
                t: m.exp() * noise(),
                r: (2.0 * m).exp() * noise(),
            }
        })
        .collect();
    let f = scaling_law(&pts).unwrap();
    let inside = |l: &LineFit, v: f64| l.slope_ci[0] <= v && v <= l.slope_ci[1];
    assert!(inside(&f.lambda_vs_t, 1.0), "{:?}", f.lambda_vs_t);
    assert!(inside(&f.r_vs_lambda, 2.0), "{:?}", f.r_vs_lambda);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn neck_detection_is_scale_equivariant(s in 1e-3f64..1e3) {
        let p = analytic(2e-3);
        let q = p.scaled(s);
        let a = detect_neck(&p, &isothermal_coordinate(&p).unwrap()).unwrap();
        let b = detect_neck(&q, &isothermal_coordinate(&q).unwrap()).unwrap();
        prop_assert!((b.lambda - s * a.lambda).abs() < 1e-10 * s * a.lambda);
        prop_assert!((b.t - a.t).abs() < 1e-10 * a.t);
        prop_assert!((b.r - a.r).abs() < 1e-10 * a.r);
    }

    #[test]
    fn catenoid_fit_exact_for_any_waist(c in 1e-4f64..1.0, z0 in -1.0f64..1.0) {
        let p = willmore_core::axisym::profile::catenoid_profile(c, 1.5 * c, 300).shifted(z0 * c);
        let f = fit_catenoid(&p).unwrap();
        prop_assert!((f.c - c).abs() < 1e-8 * c);
        prop_assert!((f.z0 - z0 * c).abs() < 1e-8 * c);
    }

    #[test]
    fn exact_scaling_data(m0 in -9.0f64..-2.0, step in 0.3f64..2.0) {
        let pts: Vec<ScalingPoint> = (0..4).map(|i| {
            let m = m0 - step * i as f64;
            ScalingPoint { sigma: 0.0, lambda: m.exp(), t: m.exp(), r: (2.0 * m).exp() }
        }).collect();
        let f = scaling_law(&pts).unwrap();
        prop_assert!((f.lambda_vs_t.slope - 1.0).abs() < 1e-12);
        prop_assert!((f.r_vs_lambda.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn windows_partition_energy(c in 5e-4f64..5e-3) {
        let p = analytic(c);
        let r = detect_neck(&p, &isothermal_coordinate(&p).unwrap()).unwrap();
        let e = r.energies;
        prop_assert!((e.big_lobe + e.small_lobe + e.neck - e.total).abs() < 1e-10 * e.total);
    }
}
