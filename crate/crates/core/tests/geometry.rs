use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use vsheet::geometry::*;
use vsheet::{Error, Vec2};

fn speed_residual(c: &ParamCurve, n: usize) -> f64 {
    c.sample_params(n)
        .into_iter()
        .map(|a| (c.point(a).dz.norm() / c.length() - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn circle_basics() {
    let c = make_circle(Vec2::ZERO, 1.0).unwrap();
    assert!(c.is_closed());
    assert!((c.length() - TAU).abs() < 1e-14);
    for a in c.sample_params(64) {
        assert!((c.curvature(a) - 1.0).abs() < 1e-9);
        let f = c.frame(a);
        assert!(f.s.dot(f.n).abs() < 1e-15);
        assert!((f.n - f.s.perp()).norm() < 1e-15);
        // n points to the center
        assert!((c.position(a) + f.n).norm() < 1e-14);
    }
    let shifted = make_circle(Vec2::new(0.3, 0.0), 1.0).unwrap();
    assert_eq!(shifted.length(), c.length());
    for a in [0.0, 0.1, 0.77] {
        let d = shifted.position(a) - c.position(a);
        assert!((d - Vec2::new(0.3, 0.0)).norm() < 1e-15);
        assert!((shifted.curvature(a) - 1.0).abs() < 1e-12);
    }
    let big = make_circle(Vec2::ZERO, 2.0).unwrap();
    assert!((big.curvature(0.3) - 0.5).abs() < 1e-12);
    assert!(matches!(
        make_circle(Vec2::ZERO, 0.0),
        Err(Error::InvalidParameter { .. })
    ));
    assert!(make_circle(Vec2::ZERO, -1.0).is_err());
}

#[test]
fn segment_basics() {
    let s = make_segment(1.0).unwrap();
    assert!(!s.is_closed());
    assert_eq!(s.length(), 2.0);
    assert_eq!(s.position(0.0), Vec2::new(-1.0, 0.0));
    assert_eq!(s.position(1.0), Vec2::new(1.0, 0.0));
    assert_eq!(s.position(0.5), Vec2::ZERO);
    assert_eq!(s.curvature(0.3), 0.0);
    assert_eq!(make_segment(0.5).unwrap().length(), 1.0);
    assert!(make_segment(0.0).is_err());
}

#[test]
fn fourier_curves() {
    let plain = make_fourier_curve(1.0, &[]).unwrap();
    let circle = make_circle(Vec2::ZERO, 1.0).unwrap();
    for a in [0.0, 0.2, 0.5, 0.9] {
        assert!((plain.position(a) - circle.position(a)).norm() < 1e-12);
    }
    assert!((plain.length() - TAU).abs() < 1e-12);

    let k2 = make_fourier_curve(1.0, &[(2, 0.1)]).unwrap();
    assert!(k2.length() > TAU);
    assert!(speed_residual(&k2, 1000) < 1e-10);

    let k3 = make_fourier_curve(1.0, &[(3, 0.05)]).unwrap();
    assert!(speed_residual(&k3, 1000) < 1e-10);

    // r(theta) must stay positive
    assert!(matches!(
        make_fourier_curve(1.0, &[(3, 1.5)]),
        Err(Error::InvalidParameter { .. })
    ));
}

#[test]
fn second_derivative_matches_finite_difference() {
    let c = make_fourier_curve(1.0, &[(2, 0.1), (5, 0.02)]).unwrap();
    let h = 1e-4;
    for a in [0.05, 0.31, 0.62] {
        let fd = (c.point(a + h).dz - c.point(a - h).dz) * (0.5 / h);
        let p = c.point(a);
        // h^2 truncation of the central difference dominates
        assert!((fd - p.d2z).norm() < 2e-6 * p.d2z.norm());
        let fd3 = (c.point(a + h).d2z - c.point(a - h).d2z) * (0.5 / h);
        assert!((fd3 - p.d3z).norm() < 2e-5 * p.d3z.norm());
    }
}

#[test]
fn arc_chord_examples() {
    let circle = make_circle(Vec2::ZERO, 1.0).unwrap();
    let f = arc_chord_constant(&circle, 256);
    // |a - b| / (2 sin(pi |a - b|)) peaks at the antipodes
    assert!((f - 0.25).abs() < 1e-9, "circle F = {f}");

    let seg = make_segment(1.0).unwrap();
    assert!((arc_chord_constant(&seg, 256) - 0.5).abs() < 1e-12);

    let k2 = make_fourier_curve(1.0, &[(2, 0.1)]).unwrap();
    let fk = arc_chord_constant(&k2, 256);
    assert!(fk.is_finite() && fk > f);
}

#[test]
fn arc_chord_refinement_is_monotone_and_cauchy() {
    let c = make_fourier_curve(1.0, &[(2, 0.1), (3, 0.05)]).unwrap();
    let values: Vec<f64> = [256, 512, 1024, 2048]
        .into_iter()
        .map(|n| arc_chord_constant(&c, n))
        .collect();
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{values:?}");
        assert!((w[1] - w[0]).abs() < 1e-6, "{values:?}");
    }
}

#[test]
fn pairwise_distance_examples() {
    let c1 = make_circle(Vec2::ZERO, 1.0).unwrap();
    let c2 = make_circle(Vec2::ZERO, 2.0).unwrap();
    let c3 = make_circle(Vec2::new(3.0, 0.0), 1.0).unwrap();
    assert!((pairwise_distance(&[c1.clone(), c2]).unwrap() - 1.0).abs() < 1e-10);
    assert!((pairwise_distance(&[c1.clone(), c3]).unwrap() - 1.0).abs() < 1e-10);
    assert!(matches!(
        pairwise_distance(std::slice::from_ref(&c1)),
        Err(Error::Precondition(_))
    ));
    let overlapping = make_circle(Vec2::new(1.5, 0.0), 1.0).unwrap();
    assert!(matches!(
        pairwise_distance(&[c1, overlapping]),
        Err(Error::CurvesOverlap(_))
    ));
}

#[test]
fn enclosed_area_examples() {
    let c1 = make_circle(Vec2::ZERO, 1.0).unwrap();
    assert!((enclosed_area(&c1).unwrap() - PI).abs() < 1e-10);
    let c2 = make_circle(Vec2::new(-4.0, 1.0), 2.0).unwrap();
    assert!((enclosed_area(&c2).unwrap() - 4.0 * PI).abs() < 1e-10);
    let k2 = make_fourier_curve(1.0, &[(2, 0.1)]).unwrap();
    let oracle = polygon_area(&k2, 1 << 16);
    assert!((enclosed_area(&k2).unwrap() - oracle).abs() < 1e-8);
    assert!(matches!(
        enclosed_area(&make_segment(1.0).unwrap()),
        Err(Error::NotClosed(_))
    ));
}

#[test]
fn curves_are_counter_clockwise() {
    for c in [
        make_circle(Vec2::new(0.5, -0.2), 0.7).unwrap(),
        make_fourier_curve(2.0, &[(2, 0.2), (4, 0.05)]).unwrap(),
    ] {
        assert!(polygon_area(&c, 4096) > 0.0);
        assert!(c.curvature(0.0) > 0.0 || c.curvature(0.5) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circle_frame_invariants(cx in -5.0..5.0f64, cy in -5.0..5.0f64, r in 0.1..10.0f64, a in 0.0..1.0f64) {
        let c = make_circle(Vec2::new(cx, cy), r).unwrap();
        let f = c.frame(a);
        prop_assert!((f.s.norm() - 1.0).abs() < 1e-12);
        prop_assert!((f.n.norm() - 1.0).abs() < 1e-12);
        prop_assert!(f.s.dot(f.n).abs() < 1e-12);
        prop_assert!((f.kappa * r - 1.0).abs() < 1e-9);
        prop_assert!((c.point(a).dz.norm() / c.length() - 1.0).abs() < 1e-12);
        prop_assert!((c.position(a + 1.0) - c.position(a)).norm() < 1e-9 * (1.0 + r));
    }

    #[test]
    fn rotation_is_covariant(theta in -PI..PI, a in 0.0..1.0f64, delta in 0.0..0.15f64) {
        let c = make_fourier_curve(1.0, &[(2, delta)]).unwrap();
        let r = c.rotated(theta);
        prop_assert!((r.position(a) - c.position(a).rotate(theta)).norm() < 1e-12);
        prop_assert!((r.curvature(a) - c.curvature(a)).abs() < 1e-9);
        prop_assert!((enclosed_area(&r).unwrap() - enclosed_area(&c).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn translation_keeps_shape(dx in -3.0..3.0f64, dy in -3.0..3.0f64, a in 0.0..1.0f64) {
        let c = make_fourier_curve(1.0, &[(3, 0.05)]).unwrap();
        let t = c.translated(Vec2::new(dx, dy));
        prop_assert!((t.position(a) - c.position(a) - Vec2::new(dx, dy)).norm() < 1e-12);
        prop_assert!((t.length() - c.length()).abs() < 1e-15);
        prop_assert!((enclosed_area(&t).unwrap() - enclosed_area(&c).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn fourier_curves_have_constant_speed(k in 2u32..6, delta in 0.0..0.04f64) {
        let c = make_fourier_curve(1.0, &[(k, delta)]).unwrap();
        prop_assert!(speed_residual(&c, 257) < 1e-10);
    }
}
