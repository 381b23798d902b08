use std::path::Path;

use proptest::prelude::*;
use vsheet::functional::Verdict;
use vsheet::harness::config::{CurveSpec, BUNDLED};
use vsheet::harness::emit::{csv_header, write_csv};
use vsheet::harness::*;
use vsheet::Error;

const SMALL: &str = r#"
name = "small_far_circles"
eps_sweep = [0.04, 0.02, 0.01]

[resolution]
n_alpha_closed = 64
n_eta = 8
n_res = 32
br_nodes_closed = 128

[[curves]]
kind = "circle"
center = [0.0, 0.0]
radius = 1.0

[[curves]]
kind = "circle"
center = [3.0, 0.0]
radius = 1.0

[[strengths]]
kind = "constant"
gamma0 = 1.0

[[strengths]]
kind = "constant"
gamma0 = 1.0
"#;

fn scenario_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios"))
}

#[test]
fn bundled_scenarios_load() {
    let spec = load_scenario(scenario_dir().join("concentric_two_circles.toml")).unwrap();
    assert_eq!(spec.curves.len(), 2);
    assert_eq!(spec.omega, 0.0);
    assert_eq!(spec, bundled_scenario("concentric_two_circles").unwrap());
    for (name, _) in BUNDLED {
        let from_file = load_scenario(scenario_dir().join(format!("{name}.toml"))).unwrap();
        assert_eq!(from_file.name, name);
    }
    assert!(matches!(bundled_scenario("nope"), Err(Error::Config(_))));
}

#[test]
fn toml_round_trip() {
    for (name, _) in BUNDLED {
        let spec = bundled_scenario(name).unwrap();
        let text = spec.to_toml().unwrap();
        assert_eq!(ScenarioSpec::from_toml(&text).unwrap(), spec, "{name}");
    }
}

#[test]
fn validation_errors_name_the_invariant() {
    let ascending = SMALL.replace("[0.04, 0.02, 0.01]", "[0.01, 0.02, 0.04]");
    match ScenarioSpec::from_toml(&ascending) {
        Err(Error::Config(m)) => assert!(m.contains("strictly decreasing"), "{m}"),
        other => panic!("{other:?}"),
    }
    let negative = SMALL.replace("[0.04, 0.02, 0.01]", "[0.04, -0.02]");
    assert!(ScenarioSpec::from_toml(&negative).is_err());

    let segment = r#"
name = "bad_segment"
omega = 1.0
eps_sweep = [0.04, 0.02, 0.01]
[[curves]]
kind = "segment"
a = 1.0
[[strengths]]
kind = "semicircle"
omega = 1.0
regularity = "closed_c2"
"#;
    match ScenarioSpec::from_toml(segment) {
        Err(Error::Config(m)) => assert!(m.contains("closed_c2"), "{m}"),
        other => panic!("{other:?}"),
    }

    let mismatch = SMALL.replacen("[[strengths]]\nkind = \"constant\"\ngamma0 = 1.0\n", "", 1);
    assert!(ScenarioSpec::from_toml(&mismatch).is_err());
    let unknown = SMALL.replace("eps_sweep", "colour = 1\neps_sweep");
    assert!(ScenarioSpec::from_toml(&unknown).is_err());
    let odd = SMALL.replace("n_eta = 8", "n_eta = 9");
    assert!(ScenarioSpec::from_toml(&odd).is_err());
}

#[test]
fn load_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    match load_scenario(&missing) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("absent.toml")),
        other => panic!("{other:?}"),
    }
    let overlap = dir.path().join("overlap.toml");
    std::fs::write(&overlap, SMALL.replace("[3.0, 0.0]", "[1.0, 0.0]")).unwrap();
    assert!(matches!(
        load_scenario(&overlap),
        Err(Error::CurvesOverlap(_))
    ));
}

#[test]
fn curve_specs_build() {
    let c = CurveSpec::Fourier {
        base_radius: 1.0,
        modes: vec![(2, 0.1)],
    }
    .build()
    .unwrap();
    assert!(c.is_closed());
    assert!(CurveSpec::Segment { a: -1.0 }.build().is_err());
}

#[test]
fn csv_header_layout() {
    assert_eq!(
        csv_header(1),
        [
            "eps",
            "I_eps",
            "I_tilde",
            "J_eps",
            "A_1",
            "residual_BR1",
            "residual_BR2",
            "defect_linearity",
            "talenti_int_gap"
        ]
    );
    let h = csv_header(3);
    let pairs: Vec<&str> = h
        .iter()
        .filter(|s| s.starts_with("B_"))
        .map(|s| s.as_str())
        .collect();
    assert_eq!(pairs, ["B_1_2", "B_1_3", "B_2_3"]);
}

#[test]
fn fit_rate_examples() {
    let sweep = [0.08, 0.04, 0.02, 0.01];
    let linear: Vec<_> = sweep.iter().map(|&e| (e, 3.0 * e)).collect();
    let f = fit_rate(&linear, FitOptions::default()).unwrap();
    assert!((f.exponent - 1.0).abs() < 1e-9 && (f.r_squared - 1.0).abs() < 1e-12);

    let flat: Vec<_> = sweep.iter().map(|&e| (e, 2.5)).collect();
    assert!(
        fit_rate(&flat, FitOptions::default())
            .unwrap()
            .exponent
            .abs()
            < 1e-12
    );

    let holder: Vec<_> = sweep
        .iter()
        .map(|&e: &f64| (e, e.sqrt() * e.ln().abs()))
        .collect();
    let corrected = fit_rate(
        &holder,
        FitOptions {
            log_correction: true,
        },
    )
    .unwrap();
    assert!((corrected.exponent - 0.5).abs() < 0.02, "{corrected:?}");
    let plain = fit_rate(&holder, FitOptions::default()).unwrap();
    assert!(plain.exponent < 0.5);

    let zero: Vec<_> = sweep.iter().map(|&e| (e, 0.0)).collect();
    assert_eq!(
        fit_rate(&zero, FitOptions::default()).unwrap().exponent,
        f64::INFINITY
    );
    let negative = [(0.04, 1.0), (0.02, -1.0), (0.01, 1.0)];
    assert!(fit_rate(&negative, FitOptions::default()).is_err());
    assert!(fit_rate(&linear[..2], FitOptions::default()).is_err());
}

#[test]
fn small_run_artifacts_are_reproducible() {
    let spec = ScenarioSpec::from_toml(SMALL).unwrap();
    let a = run_scenario(&spec).unwrap();
    assert_eq!(a.sweep.len(), spec.eps_sweep.len());
    for (o, &e) in a.sweep.iter().zip(&spec.eps_sweep) {
        assert_eq!(o.epsilon, e);
        assert!(o.point.is_some(), "{:?}", o.error);
    }
    assert_eq!(a.verdict.verdict, Verdict::Obstructed);
    assert!(a.fit("abs_I_eps").is_some());

    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let files = emit_results(&a, d1.path().join("out")).unwrap();
    assert_eq!(files.len(), 2);
    let b = run_scenario(&spec).unwrap();
    emit_results(&b, d2.path()).unwrap();
    let csv1 = std::fs::read(d1.path().join("out/sweep.csv")).unwrap();
    let csv2 = std::fs::read(d2.path().join("sweep.csv")).unwrap();
    assert_eq!(csv1, csv2);
    let text = String::from_utf8(csv1).unwrap();
    assert_eq!(text.lines().count(), 1 + spec.eps_sweep.len());
    assert!(text.starts_with("eps,I_eps,I_tilde,J_eps,A_1,A_2,B_1_2,"));

    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d1.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["verdict"]["verdict"], "OBSTRUCTED");
    assert_eq!(json["sweep"].as_array().unwrap().len(), 3);
}

#[test]
fn unwritable_output_reports_the_path() {
    let spec = ScenarioSpec::from_toml(SMALL).unwrap();
    let a = run_scenario(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out");
    match emit_results(&a, &target) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("file"), "{e}"),
        other => panic!("{other:?}"),
    }
    match write_csv(&a, &blocker.join("sweep.csv")) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("sweep.csv"), "{e}"),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_laws_are_recovered(p in -2.0..3.0f64, c in 1e-3..1e3f64) {
        let pairs: Vec<(f64, f64)> = [0.08, 0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&e: &f64| (e, c * e.powf(p)))
            .collect();
        let f = fit_rate(&pairs, FitOptions::default()).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-9);
        prop_assert!(f.r_squared > 1.0 - 1e-9 || p.abs() < 1e-6);
    }

    #[test]
    fn fit_is_invariant_under_rescaling(
        vals in prop::collection::vec(1e-6..1.0f64, 3..8),
        k in 1e-3..1e3f64,
    ) {
        let pairs: Vec<(f64, f64)> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| (0.1 / (1u32 << i) as f64, v))
            .collect();
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(e, v)| (e, k * v)).collect();
        let a = fit_rate(&pairs, FitOptions::default()).unwrap();
        let b = fit_rate(&scaled, FitOptions::default()).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
        prop_assert!(a.r_squared >= -1e-12 && a.r_squared <= 1.0 + 1e-12);
    }
}
