use adicflow::experiment::{cmd_deviation, cmd_limit, cmd_selftest, cmd_spectral, ExperimentConfig, SpectralOutput, SUITES};
use adicflow::Error;

const QA: &str = r#"{"graph": {"matrix": [[3, 1], [1, 3]]},
    "observables": [
        {"name": "f", "depth": 2, "terms": [{"word": [0, 0], "coeff": [1, 0]}, {"word": [5, 3], "coeff": [0.5, 0]}], "center": true},
        {"name": "b", "depth": 1, "terms": [{"word": [3], "coeff": [1, 0]}], "center": true}],
    "deviation": {"ns": [4, 5, 6], "samples": 32, "svg": true},
    "limit": {"ns": [5, 6], "taus": [1.0], "samples": 200, "eta_samples": 200, "modulus_samples": 10},
    "seed": 3}"#;

fn qa() -> ExperimentConfig {
    ExperimentConfig::from_json(QA).unwrap()
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"graph": {"matrix": [[3, 1], [1, 3]]}, "sed": 4}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"deviation": {"sample": 4}}"#).is_err());
    assert!(ExperimentConfig::from_json("{").is_err());
}

#[test]
fn model_needs_exactly_one_source() {
    let none = ExperimentConfig::from_json("{}").unwrap();
    assert!(matches!(none.model(), Err(Error::Config(_))));
    let both = ExperimentConfig::from_json(
        r#"{"graph": {"matrix": [[3, 1], [1, 3]]},
            "sequence": {"graphs": [{"matrix": [[3, 1], [1, 3]]}], "probs": [1.0]}}"#,
    )
    .unwrap();
    assert!(matches!(both.model(), Err(Error::Config(_))));
}

#[test]
fn invalid_graph_is_a_validation_error() {
    let cfg = ExperimentConfig::from_json(r#"{"graph": {"matrix": [[1, 1], [0, 0]]}}"#).unwrap();
    let err = cfg.model().err().unwrap();
    assert!(err.is_validation(), "{err}");
}

#[test]
fn missing_observable() {
    let mut cfg = qa();
    cfg.deviation.observable = Some("g".into());
    match cmd_deviation(&cfg) {
        Err(Error::Config(m)) => assert_eq!(m, "observable 'g' not found"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn spectral_report() {
    match cmd_spectral(&qa()).unwrap() {
        SpectralOutput::Periodic { report, invariants_ok, .. } => {
            assert!(invariants_ok);
            assert!((report.theta1 - 4f64.ln()).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn deviation_artifacts() {
    let (files, runs) = cmd_deviation(&qa()).unwrap();
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["deviation.csv", "deviation.svg"]);
    let csv = &files[0].1;
    assert!(csv.starts_with("observable,n[level],time[flow units]"));
    // Header plus three rows per observable.
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert_eq!(runs.len(), 2);
    assert!(files[1].1.starts_with("<svg"));
}

#[test]
fn limit_artifacts_are_reproducible() {
    let mut cfg = qa();
    cfg.limit.observable = Some("f".into());
    let (a, _) = cmd_limit(&cfg).unwrap();
    let (b, _) = cmd_limit(&cfg).unwrap();
    assert_eq!(a, b);
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["ks.csv", "moments.csv", "modulus.csv"]);
    cfg.seed = 4;
    assert_ne!(cmd_limit(&cfg).unwrap().0, a);
}

#[test]
fn selftest_suites() {
    let all = cmd_selftest(&[], None).unwrap();
    assert_eq!(all.len(), SUITES.len());
    for s in &all {
        assert!(s.passed(), "{}: {:?} {:?}", s.suite, s.error, s.checks);
    }
    let one = cmd_selftest(&["spectral".to_string()], None).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].suite, "spectral");
}

#[test]
fn zero_tolerance_fails_checks() {
    let r = cmd_selftest(&["adic_flow".to_string(), "limit_harness".to_string()], Some(0.0)).unwrap();
    assert!(r.iter().any(|s| !s.passed()));
}

#[test]
fn unknown_suite() {
    assert!(matches!(cmd_selftest(&["nope".to_string()], None), Err(Error::Config(_))));
}
