use vsheet::birkhoff_rott::StrengthProfile;
use vsheet::elliptic::*;
use vsheet::geometry::{enclosed_area, make_circle, make_fourier_curve, make_segment};
use vsheet::layer::{build_layer, injectivity_certificate, LayerGrid};
use vsheet::Vec2;

fn unit_annulus(eps: f64, na: usize, ne: usize) -> LayerGrid {
    let c = make_circle(Vec2::ZERO, 1.0).unwrap();
    build_layer(&c, &StrengthProfile::constant(1.0).unwrap(), eps, na, ne).unwrap()
}

fn solve(layer: &LayerGrid) -> PoissonSolution {
    let cert = injectivity_certificate(layer.curve(), layer.strength(), layer.epsilon(), 2000);
    assert_sufficient(&cert);
    assemble_and_solve(&MappedPoissonProblem::new(layer, &cert).unwrap()).unwrap()
}

fn assert_sufficient(cert: &vsheet::layer::InjectivityCertificate) {
    assert!(cert.passed, "certificate failed: {cert:?}");
}

#[test]
fn annulus_matches_closed_form() {
    for eps in [0.08, 0.04, 0.02, 0.01] {
        let layer = unit_annulus(eps, 512, 16);
        let sol = solve(&layer);
        let h = 1.0 / 16.0;
        let c = sol.c_eps.unwrap();
        let exact_c = eps + eps * eps / 2.0;
        assert!((c - exact_c).abs() <= 1e-8, "eps={eps} c={c} vs {exact_c}");
        let worst = layer
            .positions
            .iter()
            .zip(&sol.values)
            .map(|(x, p)| (p - (-x.norm2() / 2.0 + (1.0 + eps) * (1.0 + eps) / 2.0)).abs())
            .fold(0.0, f64::max);
        assert!(
            worst <= 5.0 * (h * h + 1e-10),
            "eps={eps} nodal error {worst}"
        );
        assert!(
            sol.flux_residual < 1e-10,
            "flux residual {}",
            sol.flux_residual
        );
        eprintln!(
            "eps={eps} c_err={:.3e} p_err={worst:.3e} solve_res={:.3e} mm={:.3e}",
            (c - exact_c).abs(),
            sol.solve_residual,
            sol.m_matrix_violation
        );
    }
}

fn manufactured_error(na: usize, ne: usize) -> f64 {
    let c = make_fourier_curve(1.0, &[(2, 0.1), (3, 0.05)]).unwrap();
    let g = StrengthProfile::fourier(1.0, vec![(1, 0.3)], vec![(2, 0.1)]).unwrap();
    let layer = build_layer(&c, &g, 0.2, na, ne).unwrap();
    let u = |x: Vec2| x.x.sin() * x.y.cos();
    let sol = solve_dirichlet(&layer, |x| -2.0 * u(x), u).unwrap();
    layer
        .positions
        .iter()
        .zip(&sol)
        .map(|(x, p)| (p - u(*x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let coarse = manufactured_error(64, 8);
    let fine = manufactured_error(128, 16);
    let order = (coarse / fine).log2();
    eprintln!("manufactured: {coarse:.3e} -> {fine:.3e}, order {order:.3}");
    assert!((1.7..=2.3).contains(&order), "observed order {order}");
}

#[test]
fn segment_pressure_is_order_eps_squared() {
    let seg = make_segment(1.0).unwrap();
    let g = StrengthProfile::semicircle(2.0, 1.0).unwrap();
    let eps = 0.01;
    let layer = build_layer(&seg, &g, eps, 768, 16).unwrap();
    let sol = solve(&layer);
    let gmax = g.range(4096).1;
    let pmax = sol.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pmin = sol.values.iter().copied().fold(f64::INFINITY, f64::min);
    eprintln!(
        "segment: max p {pmax:.3e} bound {:.3e} min p {pmin:.3e}",
        72.0 * gmax * gmax * eps * eps
    );
    assert!(pmax <= 36.0 * gmax * gmax * 2.0 * eps * eps);
    assert!(pmin >= -1e-14);
    let gaps = talenti_check(&sol, &layer);
    assert!(gaps.sup_gap > 0.0 && gaps.int_gap > 0.0);
}

#[test]
fn circle_decomposition_matches_closed_form() {
    let eps = 0.01;
    let layer = unit_annulus(eps, 256, 16);
    let sol = solve(&layer);
    let d = decompose_p(&sol, &layer, std::f64::consts::PI).unwrap();
    assert!((d.beta - 1.0).abs() < 1e-12);
    // |c/eps - beta| = eps/2
    assert!((d.c_beta_defect - 0.5).abs() < 1e-8, "{}", d.c_beta_defect);
    let c = sol.c_eps.unwrap();
    for (i, &q) in d.q.iter().enumerate() {
        let eta = layer.eta[i % layer.n_eta()];
        let r = 1.0 - eps * eta;
        let exact = -r * r / 2.0 + (1.0 + eps) * (1.0 + eps) / 2.0 - c * (1.0 + eta);
        assert!((q - exact).abs() < 1e-12);
    }
    assert!(d.q_over_eps2 <= 1.0);
    assert!(d.grad_defect <= 2.0 * eps);
    assert!(boundary_gradient_check(&d, &layer) <= 2.0 * eps);
    let gaps = talenti_check(&sol, &layer);
    assert!(
        gaps.sup_gap.abs() < 1e-10 && gaps.int_gap.abs() < 1e-10,
        "{gaps:?}"
    );
}

#[test]
fn constant_strength_circle_c_over_eps() {
    let c = make_circle(Vec2::ZERO, 1.0).unwrap();
    let g = StrengthProfile::constant(2.0).unwrap();
    for eps in [0.02, 0.01] {
        let layer = build_layer(&c, &g, eps, 128, 8).unwrap();
        let ce = solve(&layer).c_eps.unwrap();
        assert!(
            (ce / eps - 2.0 - 4.0 * eps / 2.0).abs() < 1e-8,
            "eps={eps} c={ce}"
        );
    }
}

#[test]
fn fourier_decomposition_is_stable_over_the_sweep() {
    let c = make_fourier_curve(1.0, &[(2, 0.1)]).unwrap();
    let g = StrengthProfile::constant(1.0).unwrap();
    let area = enclosed_area(&c).unwrap();
    let sweep = [0.04, 0.02, 0.01, 0.005];
    let mut q = Vec::new();
    let mut gq = Vec::new();
    for eps in sweep {
        let layer = build_layer(&c, &g, eps, 512, 16).unwrap();
        let sol = solve(&layer);
        assert!(sol.flux_residual < 1e-10, "flux {}", sol.flux_residual);
        let d = decompose_p(&sol, &layer, area).unwrap();
        let gaps = talenti_check(&sol, &layer);
        assert!(gaps.int_gap / (eps * eps) > 0.01);
        assert!(gaps.sup_gap > -1e-12);
        assert!(d.c_beta_defect < 10.0);
        assert!(d.grad_defect < 10.0 * eps);
        q.push(d.q_over_eps2);
        gq.push(boundary_gradient_check(&d, &layer));
    }
    for w in q.windows(2) {
        let r = w[1] / w[0];
        assert!((0.5..=2.0).contains(&r), "q/eps^2 {q:?}");
    }
    let pairs: Vec<(f64, f64)> = sweep.iter().copied().zip(gq.iter().copied()).collect();
    let fit = vsheet::harness::fit_rate(&pairs, Default::default()).unwrap();
    assert!(
        fit.exponent >= 0.8,
        "grad q {gq:?} exponent {}",
        fit.exponent
    );
}

#[test]
fn discrete_maximum_principle() {
    let c = make_fourier_curve(1.0, &[(2, 0.1), (3, 0.05)]).unwrap();
    let g = StrengthProfile::fourier(1.0, vec![(1, 0.4)], vec![]).unwrap();
    let layer = build_layer(&c, &g, 0.03, 256, 16).unwrap();
    let sol = solve(&layer);
    // boundary data is 0 and c > 0
    let min = sol.values.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(sol.c_eps.unwrap() > 0.0);
    assert!(min >= -1e-14, "min p {min}");
}

#[test]
fn certificate_gate_refuses_large_eps() {
    let c = make_circle(Vec2::ZERO, 1.0).unwrap();
    let g = StrengthProfile::constant(1.0).unwrap();
    let layer = build_layer(&c, &g, 10.0, 64, 8).unwrap();
    let cert = injectivity_certificate(&c, &g, 10.0, 2000);
    assert!(matches!(
        MappedPoissonProblem::new(&layer, &cert),
        Err(vsheet::Error::CertificateFailed { .. })
    ));
    let small = injectivity_certificate(&c, &g, 0.01, 2000);
    assert!(MappedPoissonProblem::new(&layer, &small).is_err());
}

#[test]
fn decompose_refuses_open_curves() {
    let seg = make_segment(1.0).unwrap();
    let g = StrengthProfile::semicircle(2.0, 1.0).unwrap();
    let layer = build_layer(&seg, &g, 0.01, 128, 8).unwrap();
    let sol = solve(&layer);
    assert!(sol.c_eps.is_none());
    assert!(matches!(
        decompose_p(&sol, &layer, 1.0),
        Err(vsheet::Error::NotClosed(_))
    ));
}
