use hyperharm_core::config::RunConfig;
use hyperharm_core::verify::{fit_slope, run_suite, run_suites, summary_csv, Status, SuiteReport, VerifyError};

fn quiet(mut r: SuiteReport) -> SuiteReport {
    r.runtime_s = None;
    r
}

#[test]
fn report_shape() {
    let r = quiet(run_suite("operator-identities", &RunConfig::default()).unwrap());
    assert_eq!(r.status, Status::Pass);
    assert!(r.failures().is_empty());
    assert!(r.residuals.count > 0 && r.residuals.max >= r.residuals.mean);
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["suite"], "operator-identities");
    assert_eq!(v["status"], "pass");
    assert_eq!(v["seed"], 42);
    assert!(v.get("runtime_s").is_none());
    assert!(!v["measures"].as_array().unwrap().is_empty());
}

#[test]
fn summary_rows_parse() {
    let reports: Vec<_> = ["green", "operator-identities"]
        .iter()
        .map(|s| run_suite(s, &RunConfig::default()).unwrap())
        .collect();
    let csv = summary_csv(&reports);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("suite,status,constant,value,tolerance,runtime_s"));
    let rows: Vec<_> = lines.collect();
    let want: usize = reports.iter().map(|r| r.measures.len()).sum();
    assert_eq!(rows.len(), want);
    for row in rows {
        let f: Vec<_> = row.split(',').collect();
        assert_eq!(f.len(), 6, "{row}");
        assert!(f[3].parse::<f64>().is_ok(), "{row}");
        assert!(f[5].parse::<f64>().is_ok(), "{row}");
    }
}

#[test]
fn reruns_are_identical() {
    let cfg = RunConfig { seed: 7, ..RunConfig::default() };
    let names = vec!["green".to_string(), "lipschitz".to_string()];
    let a: Vec<_> = run_suites(&names, &cfg).unwrap().into_iter().map(quiet).collect();
    let b: Vec<_> = run_suites(&names, &cfg).unwrap().into_iter().map(quiet).collect();
    assert_eq!(a, b);
    assert_eq!(summary_csv(&a), summary_csv(&b));
    assert!(a.iter().all(|r| r.seed == 7));
}

#[test]
fn seed_changes_random_families() {
    let a = quiet(run_suite("green", &RunConfig { seed: 1, ..RunConfig::default() }).unwrap());
    let b = quiet(run_suite("green", &RunConfig { seed: 2, ..RunConfig::default() }).unwrap());
    assert_ne!(a.measures, b.measures);
}

#[test]
fn tight_tolerance_fails() {
    let mut cfg = RunConfig::default();
    cfg.tolerances.identity = 1e-300;
    let r = run_suite("operator-identities", &cfg).unwrap();
    assert_eq!(r.status, Status::Fail);
    assert!(!r.failures().is_empty());
}

#[test]
fn unknown_suite() {
    assert!(matches!(run_suite("nope", &RunConfig::default()), Err(VerifyError::UnknownSuite(_))));
    let names = vec!["green".to_string(), "nope".to_string()];
    assert!(matches!(run_suites(&names, &RunConfig::default()), Err(VerifyError::UnknownSuite(_))));
}

#[test]
fn config_round_trip() {
    let cfg = RunConfig { n: 5, lmax: 6, seed: 9, ..RunConfig::default() };
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    assert!(RunConfig::from_json(r#"{"tolerances": {"identity": -1}}"#).is_err());
    assert!(RunConfig::from_json(r#"{"alphas": [1.0]}"#).is_err());
}

#[test]
fn slope_of_line() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y: Vec<f64> = x.iter().map(|v| 0.5 - 2.0 * v).collect();
    assert!((fit_slope(&x, &y) + 2.0).abs() < 1e-14);
}
