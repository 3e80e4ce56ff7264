use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use willmore_core::axisym::profile::axisym_metrics;
use willmore_core::functionals::metrics;
use willmore_core::io::{read_profile_csv, write_profile_csv};
use willmore_core::mesh::{ellipsoid, icosphere, Vec3};
use willmore_core::oracle::*;
use willmore_core::verify::perturbed_sphere;
use willmore_core::Error;

fn cfg() -> ProptestConfig {
    ProptestConfig {
        cases: 16,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

#[test]
fn area_along_the_normal() {
    // on the unit sphere n = x, and the first variation of area is -int H <phi, n> = 2 * 4 pi
    let m = icosphere(4, 1.0).unwrap();
    let d: Vec<Vec3> = m.vertices.clone();
    let fa = fd_directional(|m| Ok(metrics(m)?.area), &m, &d).unwrap();
    assert!(!fa.flagged);
    assert!((fa.value - 8.0 * PI).abs() < 2e-3 * 8.0 * PI, "{}", fa.value);
    let fs = fd_directional(|m| Ok(metrics(m)?.sigma), &m, &d).unwrap();
    assert!(fs.value.abs() < 1e-9, "{}", fs.value);
}

#[test]
fn willmore_is_stationary_along_moebius_fields() {
    // W is Moebius invariant for every closed surface, so its derivative along
    // the infinitesimal special conformal map 2 (b.x) x - |x|^2 b vanishes up
    // to discretization. An off-center bumpy sphere avoids symmetric cancellation.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = perturbed_sphere(4, 0.3, &mut rng)
        .unwrap()
        .translated(Vec3::new(0.4, -0.2, 0.3));
    let b = Vec3::new(0.3, -0.5, 0.8);
    let conformal: Vec<Vec3> = m
        .vertices
        .iter()
        .map(|x| 2.0 * b.dot(x) * x - x.norm_squared() * b)
        .collect();
    let bend: Vec<Vec3> = m.vertices.iter().map(|x| b.dot(x).powi(2) * x).collect();
    let w = |m: &willmore_core::mesh::TriMesh| Ok(metrics(m)?.willmore);
    let along = fd_directional(w, &m, &conformal).unwrap();
    let other = fd_directional(w, &m, &bend).unwrap();
    let size = |d: &[Vec3]| d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (a, o) = (along.value / size(&conformal), other.value / size(&bend));
    assert!(a.abs() < 1e-2 * o.abs(), "{a} vs {o}");
}

#[test]
fn inversion_involution() {
    let m = ellipsoid(3, 1.0, 0.8, 1.3).unwrap();
    let y0 = Vec3::new(2.0, 0.5, -0.3);
    // I about y0 followed by I about the origin is y -> y - y0
    let back = invert(&invert(&m, y0).unwrap(), Vec3::zeros()).unwrap().translated(y0);
    assert_eq!(back.faces, m.faces);
    for (a, b) in back.vertices.iter().zip(&m.vertices) {
        assert!((a - b).norm() < 1e-10 * b.norm(), "{a} vs {b}");
    }
}

#[test]
fn inversion_keeps_willmore() {
    let m = ellipsoid(4, 1.0, 1.0, 1.4).unwrap();
    let w0 = metrics(&m).unwrap().willmore;
    let w1 = metrics(&invert(&m, Vec3::new(0.0, 2.0, 2.0)).unwrap())
        .unwrap()
        .willmore;
    assert!((w1 - w0).abs() < 2e-2 * w0);
    assert!(matches!(invert(&m, m.vertices[0]), Err(Error::CenterOnSurface(_))));
}

#[test]
fn double_sphere_profile_matches_quadrature() {
    let s = ReferenceSurface::DoubleSphereNeck { c: 2e-3 };
    let exact = reference_metrics(&s).unwrap();
    let d = axisym_metrics(&s.profile(4000).unwrap()).unwrap();
    assert!((d.area - exact.area).abs() < 1e-4 * exact.area);
    assert!((d.willmore - exact.willmore).abs() < 1e-2 * exact.willmore);
}

#[test]
fn profile_round_trip_is_bitwise() {
    let p = ReferenceSurface::DoubleSphereNeck { c: 1e-3 }.profile(2000).unwrap();
    let text = write_profile_csv(&p);
    let q = read_profile_csv(&text).unwrap();
    assert_eq!(q.samples, p.samples);
    assert_eq!(write_profile_csv(&q), text);
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn involution_for_any_exterior_center(x in 1.8f64..4.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
        let m = icosphere(2, 1.0).unwrap();
        let y0 = Vec3::new(x, y, z);
        let back = invert(&invert(&m, y0).unwrap(), Vec3::zeros()).unwrap().translated(y0);
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn graph_formulas_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = willmore_core::verify::graph_consistency(1, 20, &mut rng).unwrap();
        prop_assert!(e < 1e-10, "{}", e);
    }

    #[test]
    fn sigma_is_scale_invariant_to_first_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = perturbed_sphere(2, 0.3, &mut rng).unwrap();
        let c = m.centroid();
        let d: Vec<Vec3> = m.vertices.iter().map(|v| v - c).collect();
        let f = fd_directional(|m| Ok(metrics(m)?.sigma), &m, &d).unwrap();
        prop_assert!(f.value.abs() < 1e-9, "{}", f.value);
    }

    #[test]
    fn reference_metrics_are_scale_covariant(r in 0.1f64..10.0, ratio in 0.5f64..2.0) {
        let a = reference_metrics(&ReferenceSurface::Ellipsoid { a: 1.0, b: 1.0, c: ratio }).unwrap();
        let b = reference_metrics(&ReferenceSurface::Ellipsoid { a: r, b: r, c: r * ratio }).unwrap();
        prop_assert!((a.willmore - b.willmore).abs() < 1e-9 * a.willmore);
        prop_assert!((a.sigma - b.sigma).abs() < 1e-9);
        prop_assert!((b.area - r * r * a.area).abs() < 1e-9 * b.area);
    }
}
