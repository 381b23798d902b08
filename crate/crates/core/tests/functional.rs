use std::f64::consts::PI;

use vsheet::birkhoff_rott::{SheetConfiguration, StrengthProfile};
use vsheet::elliptic::{assemble_and_solve, MappedPoissonProblem, PoissonSolution};
use vsheet::functional::*;
use vsheet::geometry::{make_circle, make_fourier_curve, make_segment, ParamCurve};
use vsheet::layer::{build_layer, injectivity_certificate, LayerGrid};
use vsheet::Vec2;

fn solved(
    cfg: &SheetConfiguration,
    eps: f64,
    na: usize,
    ne: usize,
) -> (Vec<LayerGrid>, Vec<PoissonSolution>) {
    let layers: Vec<LayerGrid> = cfg
        .components()
        .iter()
        .map(|(c, g)| build_layer(c, g, eps, na, ne).unwrap())
        .collect();
    let sols = layers
        .iter()
        .map(|l| {
            let cert = injectivity_certificate(l.curve(), l.strength(), eps, 2000);
            assemble_and_solve(&MappedPoissonProblem::new(l, &cert).unwrap()).unwrap()
        })
        .collect();
    (layers, sols)
}

fn report(cfg: &SheetConfiguration, eps: f64, na: usize, ne: usize) -> FunctionalReport {
    let (layers, sols) = solved(cfg, eps, na, ne);
    let v = layer_velocities(&layers);
    positivity_decomposition(cfg, &layers, &sols, &v).unwrap()
}

fn circle(cx: f64, cy: f64, r: f64) -> ParamCurve {
    make_circle(Vec2::new(cx, cy), r).unwrap()
}

fn one() -> StrengthProfile {
    StrengthProfile::constant(1.0).unwrap()
}

#[test]
fn single_circle_first_variation_vanishes() {
    let cfg = SheetConfiguration::new(vec![(circle(0.0, 0.0, 1.0), one())], 0.0).unwrap();
    let (layers, sols) = solved(&cfg, 0.02, 256, 8);
    let parts = compute_I(&cfg, &layers, &sols).unwrap();
    assert!(parts.i_tilde.abs() < 1e-10, "{parts:?}");
    assert!(parts.i_eps.abs() < 1e-10);
    assert!(parts.consistency < 1e-12);
}

#[test]
fn concentric_circles_have_zero_deficits() {
    let cfg = SheetConfiguration::new(
        vec![
            (circle(0.0, 0.0, 1.0), one()),
            (circle(0.0, 0.0, 2.0), one()),
        ],
        0.0,
    )
    .unwrap();
    let r = report(&cfg, 0.02, 256, 8);
    assert!(r.a.iter().all(|a| a.abs() < 1e-8), "{:?}", r.a);
    assert_eq!(r.b.len(), 1);
    assert_eq!(r.b[0].value, 0.0);
    assert!(r.nesting[1][0] && !r.nesting[0][1]);
    assert!(r.i_tilde.abs() < 1e-9);
    assert!(r.chain_gap().abs() < 1e-8);
}

#[test]
fn far_circles_pair_term_is_pi() {
    let cfg = SheetConfiguration::new(
        vec![
            (circle(0.0, 0.0, 1.0), one()),
            (circle(3.0, 0.0, 1.0), one()),
        ],
        0.0,
    )
    .unwrap();
    for eps in [0.02, 0.01] {
        let r = report(&cfg, eps, 256, 8);
        assert!(!r.nesting[0][1] && !r.nesting[1][0]);
        let b = r.b[0].value;
        assert!((b - PI).abs() <= 2.0 * PI * eps, "eps={eps} B={b}");
        // |D| = pi ((1 + eps)^2 - 1) for each annulus
        let exact = PI * (1.0 + eps / 2.0).powi(2);
        assert!((b - exact).abs() < 1e-9, "{b} vs {exact}");
        assert!((r.sum_b() - 2.0 * b).abs() < 1e-15);
        assert!(r.chain_gap() > -1e-6, "chain gap {}", r.chain_gap());
    }
}

#[test]
fn nonconstant_strength_cauchy_schwarz_gap() {
    let g = StrengthProfile::fourier(1.0, vec![(1, 0.5)], vec![]).unwrap();
    let cfg = SheetConfiguration::new(vec![(circle(0.0, 0.0, 1.0), g)], 0.0).unwrap();
    let r = report(&cfg, 0.02, 256, 16);
    let expected = 1.0 / (0.75f64).sqrt() - 1.0;
    assert!((r.cs_gap[0].unwrap() - expected).abs() < 1e-10);
    assert!((expected - 0.1547).abs() < 1e-4);
    assert!(r.iso_gap[0].unwrap().abs() < 1e-12);
    assert!(r.a[0] > 0.5 * r.surrogate_bound[0].unwrap());
    assert!(r.i_tilde >= r.sum_a() - 1e-6);
}

#[test]
fn fourier_curve_talenti_deficit_is_positive() {
    let c = make_fourier_curve(1.0, &[(2, 0.1)]).unwrap();
    let cfg = SheetConfiguration::new(vec![(c, one())], 0.0).unwrap();
    let r = report(&cfg, 0.02, 256, 16);
    let iso = r.iso_gap[0].unwrap();
    assert!(iso > 0.0);
    assert!(r.cs_gap[0].unwrap().abs() < 1e-12);
    let bound = r.surrogate_bound[0].unwrap();
    assert!(bound > 0.0);
    assert!(r.a[0] >= 0.5 * bound, "A={} bound={bound}", r.a[0]);
    assert!(r.chain_gap() > -1e-6);
    assert!(r.j_eps >= 0.0);
}

#[test]
fn i1_swap_symmetry() {
    let c = make_fourier_curve(1.0, &[(2, 0.1), (3, 0.03)]).unwrap();
    let g = StrengthProfile::fourier(1.0, vec![(1, 0.2)], vec![]).unwrap();
    let cfg = SheetConfiguration::new(vec![(c, g)], 0.0).unwrap();
    let r = report(&cfg, 0.02, 256, 16);
    let rel = (r.i1_direct - r.i1_area).abs() / r.i1_area;
    assert!(rel < 1e-6, "I1 {} vs {}", r.i1_direct, r.i1_area);
}

#[test]
fn offcenter_rotating_circle_matches_closed_form() {
    let cfg = SheetConfiguration::new(vec![(circle(0.3, 0.0, 1.0), one())], -0.5).unwrap();
    for eps in [0.04, 0.01] {
        let r = report(&cfg, eps, 256, 8);
        let exact = 0.5 * 0.09 * (2.0 * PI + PI * eps);
        assert!(
            (r.i_eps - exact).abs() < 1e-6 * exact,
            "{} vs {exact}",
            r.i_eps
        );
        assert!(r.i_eps >= 2.0 * PI * 0.09 * 0.5);
        assert!(r.j_eps >= 0.0);
        assert!(r.consistency < 1e-12);
        assert!((r.i_eps - (r.i_tilde + 0.5 * r.j_eps)).abs() < 1e-12);
    }
}

#[test]
fn dilation_scales_the_floor_quadratically() {
    let eps = 0.01;
    let at = |radius: f64| {
        let c = make_fourier_curve(radius, &[(2, 0.1)]).unwrap();
        let cfg = SheetConfiguration::new(vec![(c, one())], 0.0).unwrap();
        report(&cfg, eps, 256, 16).i_tilde
    };
    let ratio = at(2.0) / at(1.0);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn winding_and_nesting() {
    let c = circle(0.5, 0.0, 3.0);
    assert_eq!(winding_number(&c, Vec2::ZERO, 256), 1);
    assert_eq!(winding_number(&c, Vec2::new(5.0, 0.0), 256), 0);
    let seg = make_segment(0.5).unwrap();
    let rel = nesting_relation(&[c.clone(), circle(0.0, 0.0, 1.0), seg]);
    assert!(rel[0][1] && rel[0][2]);
    assert!(!rel[1][0] && !rel[2][0] && !rel[2][1]);
    // the segment crosses through the unit circle's interior
    assert!(rel[1][2]);
}

fn synthetic(eps: f64, i_eps: f64, i_tilde: f64) -> FunctionalReport {
    FunctionalReport {
        epsilon: eps,
        i_eps,
        i_tilde,
        j_eps: 0.0,
        i1_direct: 0.0,
        i1_area: 0.0,
        consistency: 0.0,
        a: vec![0.0],
        b: vec![],
        nesting: vec![vec![false]],
        cs_gap: vec![None],
        iso_gap: vec![None],
        surrogate_bound: vec![None],
        int_gap: vec![0.0],
        sup_gap: vec![0.0],
        area_over_eps: vec![0.0],
    }
}

#[test]
fn verdict_cases() {
    let sweep = [0.04, 0.02, 0.01, 0.005];
    let floor: Vec<_> = sweep
        .iter()
        .map(|&e| synthetic(e, 0.3 + e, 0.3 + e))
        .collect();
    let v = rigidity_verdict(&floor, 0.0, false, FLOOR_TOL).unwrap();
    assert_eq!(v.verdict, Verdict::Obstructed);
    assert!((v.floor.unwrap() - 0.305).abs() < 1e-12);

    let decaying: Vec<_> = sweep.iter().map(|&e| synthetic(e, e, e)).collect();
    let v = rigidity_verdict(&decaying, 0.0, true, FLOOR_TOL).unwrap();
    assert_eq!(v.verdict, Verdict::EquilibriumConsistent);
    assert!((v.decay_exponent.unwrap() - 1.0).abs() < 1e-9);
    let v = rigidity_verdict(&decaying, 0.0, false, FLOOR_TOL).unwrap();
    assert_eq!(v.verdict, Verdict::Inconclusive);

    let zero: Vec<_> = sweep.iter().map(|&e| synthetic(e, 1e-13, -1e-13)).collect();
    let v = rigidity_verdict(&zero, 0.0, true, FLOOR_TOL).unwrap();
    assert_eq!(v.verdict, Verdict::EquilibriumConsistent);
    assert_eq!(v.decay_exponent, Some(f64::INFINITY));

    // Omega < 0 monitors I, not I~
    let rotating: Vec<_> = sweep.iter().map(|&e| synthetic(e, 0.28 + e, 0.0)).collect();
    let v = rigidity_verdict(&rotating, -0.5, true, FLOOR_TOL).unwrap();
    assert_eq!(v.verdict, Verdict::Obstructed);

    // Omega > 0 has no floor test
    let v = rigidity_verdict(&rotating, 1.0, true, FLOOR_TOL).unwrap();
    assert_eq!(v.verdict, Verdict::Inconclusive);
    let v = rigidity_verdict(&decaying, 1.0, true, FLOOR_TOL).unwrap();
    assert_eq!(v.verdict, Verdict::EquilibriumConsistent);

    // order of the reports does not matter
    let mut shuffled = floor.clone();
    shuffled.reverse();
    assert_eq!(
        rigidity_verdict(&shuffled, 0.0, false, FLOOR_TOL).unwrap(),
        rigidity_verdict(&floor, 0.0, false, FLOOR_TOL).unwrap()
    );

    assert!(rigidity_verdict(&floor[..2], 0.0, true, FLOOR_TOL).is_err());
    assert_eq!(
        serde_json::to_string(&Verdict::EquilibriumConsistent).unwrap(),
        "\"EQUILIBRIUM_CONSISTENT\""
    );
}
