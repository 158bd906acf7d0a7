use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperharm")).args(args).output().expect("spawn hyperharm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn values(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn kernel_at_origin_is_one() {
    let o = run(&["kernel", "--kind", "hyp", "--n", "4", "--r", "0", "--points", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("t,value\n"));
    let v = values(&s);
    assert_eq!(v.len(), 11);
    assert_eq!(v[0].0, -1.0);
    assert_eq!(v[10].0, 1.0);
    assert!(v.iter().all(|(_, y)| (y - 1.0).abs() < 1e-15));
}

#[test]
fn delta_zero_is_euclidean() {
    let a = values(&stdout(&run(&["kernel", "--kind", "euclid", "--n", "3", "--r", "0.6", "--points", "21"])));
    let b = values(&stdout(&run(&["kernel", "--kind", "hyp-delta", "--delta", "0", "--n", "3", "--r", "0.6", "--points", "21"])));
    assert_eq!(a.len(), b.len());
    for ((t, x), (s, y)) in a.iter().zip(&b) {
        assert_eq!(t, s);
        assert!((x / y - 1.0).abs() < 1e-12);
    }
}

#[test]
fn truncation_warns_but_succeeds() {
    let o = run(&["kernel", "--kind", "hyp-delta", "--delta", "1", "--n", "3", "--r", "0.9", "--points", "3", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("truncated"));
    assert_eq!(values(&stdout(&o)).len(), 3);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["kernel", "--kind", "euclid", "--n", "2", "--r", "0.5"][..],
        &["kernel", "--kind", "hyp-delta", "--n", "3", "--r", "0.5"],
        &["kernel", "--kind", "euclid", "--n", "3", "--r", "1.0"],
        &["kernel", "--kind", "nope", "--n", "3", "--r", "0.5"],
        &["verify", "nope"],
        &["verify", "green", "--n", "2"],
        &["frobnicate"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"n":3,"kind":"zonal-coeffs","pole":[0,0,1]}"#);
    assert_eq!(run(&["extend", "--data", &bad]).status.code(), Some(3));
    let junk = write(dir.path(), "junk.json", "not json");
    assert_eq!(run(&["functional", "--kind", "M", "--data", &junk]).status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["extend", "--data", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn extend_writes_grid_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "u.json", r#"{"n":4,"kind":"zonal-coeffs","pole":[0,0,0,1],"coeffs":[0.5,1.0,0.25]}"#);
    let out = dir.path().join("u.csv");
    let o = run(&["extend", "--data", &data, "--r", "0", "--r", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,x1,x2,x3,x4,u"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty() && rows.len() % 2 == 0);
    for row in &rows {
        assert_eq!(row.len(), 6);
        let r2: f64 = row[1..5].iter().map(|v| v * v).sum();
        assert!((r2.sqrt() - row[0]).abs() < 1e-14);
        if row[0] == 0.0 {
            assert!((row[5] - 0.5).abs() < 1e-15);
        }
    }
}

#[test]
fn extend_dilation_domain() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "u.json", r#"{"n":3,"kind":"zonal-coeffs","pole":[0,0,1],"coeffs":[0.5,1.0]}"#);
    let plain = stdout(&run(&["extend", "--data", &data, "--r", "0.5"]));
    assert_eq!(stdout(&run(&["extend", "--data", &data, "--r", "0.5", "--delta", "1"])), plain);
    let half = run(&["extend", "--data", &data, "--r", "0.5", "--delta", "0.5"]);
    assert_eq!(half.status.code(), Some(0));
    assert_ne!(stdout(&half), plain);
    for d in ["0", "1.5", "-0.2"] {
        assert_eq!(run(&["extend", "--data", &data, "--delta", d]).status.code(), Some(2), "delta {d}");
    }
}

#[test]
fn functional_of_constant() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "c.json", r#"{"n":3,"kind":"zonal-coeffs","pole":[0,0,1],"coeffs":[1.0]}"#);
    let o = run(&["functional", "--kind", "M", "--data", &data, "--grid-degree", "6", "--p", "1", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let norms: Vec<f64> =
        s.lines().filter(|l| l.starts_with("norm,")).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(norms.len(), 2);
    assert!(norms.iter().all(|v| (v - 1.0).abs() < 1e-12));
    let o = run(&["functional", "--kind", "g", "--data", &data, "--grid-degree", "6"]);
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("norm,1,"));
    assert!(last.rsplit(',').next().unwrap().parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn verify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "green", "operator-identities", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(stdout(&o), summary);
    assert!(summary.starts_with("suite,status,constant,value,tolerance,runtime_s\n"));
    assert!(summary.lines().skip(1).all(|l| l.ends_with(',')));
    for s in ["green", "operator-identities"] {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{s}.json"))).unwrap()).unwrap();
        assert_eq!(v["suite"], s);
        assert_eq!(v["seed"], 3);
        assert_eq!(v["status"], "pass");
        assert!(v.get("runtime_s").is_none());
    }

    let o = run(&["verify", "operator-identities", "--timings"]);
    assert!(stdout(&o).lines().skip(1).all(|l| l.rsplit(',').next().unwrap().parse::<f64>().is_ok()));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"tolerances": {"identity": 1e-300}}"#);
    let o = run(&["verify", "operator-identities", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL operator-identities"));
    assert!(stdout(&o).contains(",fail,"));

    let bad = write(dir.path(), "bad.json", r#"{"bogus": 1}"#);
    assert_eq!(run(&["verify", "green", "--config", &bad]).status.code(), Some(2));
}
