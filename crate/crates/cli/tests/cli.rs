//! End-to-end runs of the binary against the files in `fixtures/`.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stratlab")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn close(v: &Value, want: &[f64]) {
    let got: Vec<f64> = v.as_array().unwrap().iter().map(f).collect();
    assert_eq!(got.len(), want.len());
    assert!(got.iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-15), "{got:?} vs {want:?}");
}

#[test]
fn check_parabola_against_the_vertical_axis() {
    let v = json(&["check", "--map", &fixture("parabola.json"), "--stratum", &fixture("s2.json"), "--point", "0"]);
    assert_eq!(v["transverse"], true);
    assert_eq!(v["verdicts"][0]["reason"], "RankFull");
    assert_eq!(f(&v["verdicts"][0]["margin"]), 1.0);
}

#[test]
fn check_against_a_whole_stratification() {
    let v = json(&["check", "--map", &fixture("parabola.json"), "--stratum", &fixture("golubitsky.json"), "--point", "0"]);
    let reasons: Vec<&str> = v["verdicts"].as_array().unwrap().iter().map(|r| r["reason"].as_str().unwrap()).collect();
    assert_eq!(reasons, ["MissesStratum", "RankFull"]);
}

#[test]
fn oracle_agrees_with_the_floating_verdicts() {
    let v = json(&["oracle", "--map", &fixture("parabola.json"), "--stratum", &fixture("golubitsky.json"), "--point", "0"]);
    assert_eq!(v["agree"], true);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["agree"], true, "{r}");
        assert_eq!(r["conclusive"], true);
    }
    // off the vertex the parabola misses both strata
    let v = json(&["oracle", "--map", &fixture("parabola.json"), "--stratum", &fixture("golubitsky.json"), "--point", "0.5"]);
    assert_eq!(v["agree"], true);
}

#[test]
fn witness_from_the_golubitsky_fault() {
    let v = json(&["witness", "--in", &fixture("golubitsky_fault.json")]);
    assert_eq!(v["field"], "real");
    let h = &v["h"]["h"];
    assert_eq!(h["basis"], serde_json::json!([[1.0], [0.0]]));
    assert_eq!(v["h"]["dim_h_plus_tx"], 2);
    assert_eq!(v["h"]["dim_h_plus_tau"], 1);
    let members = v["members"].as_array().unwrap();
    assert_eq!(members.len(), 40);
    for m in members {
        let k = m["k"].as_u64().unwrap() as f64;
        close(&m["y_k"], &[1.0 / k, 0.0]);
        assert!(f(&m["margin_y"]) <= 1e-10);
        assert!((f(&m["c1_plateau"]) - 1.0 / k).abs() <= 1e-9);
    }
}

#[test]
fn witness_from_the_complex_fault() {
    let v = json(&["witness", "--in", &fixture("complex_fault.json")]);
    assert_eq!(v["field"], "complex");
    assert_eq!(v["h"]["h"]["basis"], serde_json::json!([[1.0, 0.0], [0.0, 0.0]]));
    for m in v["members"].as_array().unwrap() {
        let k = m["k"].as_u64().unwrap() as f64;
        close(&m["y_k"], &[1.0 / k, 0.0, 0.0, 0.0]);
        assert_eq!(m["verdict_y"]["transverse"], false);
    }
    // the same file under the wrong field flag is refused
    let out = run(&["witness", "--in", &fixture("complex_fault.json"), "--field", "real"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn condition_a_is_refuted_at_the_origin() {
    let v = json(&["condition-a", "--in", &fixture("golubitsky_condition_a.json")]);
    assert_eq!(v["verdict"], "refuted");
    assert_eq!(v["holds"], false);
    assert!((f(&v["containment_residual"]) - 1.0).abs() <= 1e-6);
    assert_eq!(v["steps"].as_array().unwrap().len(), 30);
}

#[test]
fn compact_check_reports_the_clearance() {
    let v = json(&[
        "check-compact",
        "--map",
        &fixture("hirsch.json"),
        "--stratum",
        &fixture("circle.json"),
        "--k",
        r#"{"lo": [0.5], "hi": [2.0]}"#,
        "--grid",
        "101",
    ]);
    assert_eq!(v["certified"], true);
    assert!((f(&v["min_clearance"]) - (1.8125f64.sqrt() - 1.0)).abs() <= 1e-12);
}

#[test]
fn probes_are_deterministic() {
    let args = ["probe", "--spec", &fixture("hirsch_probe.json"), "--count", "40", "--grid", "101"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(f(&v["transverse_fraction"]), 1.0);
    // a different seed changes the samples
    let c = run(&["probe", "--spec", &fixture("hirsch_probe.json"), "--count", "40", "--grid", "101", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn directed_probe_finds_the_escaping_failure() {
    let v = json(&["probe", "--spec", &fixture("hirsch_directed.json"), "--grid", "101"]);
    let d = &v["directed"];
    assert!(f(&d["c"]) <= 0.025);
    assert_eq!(d["counterexample"]["escapes_k"], true);
    assert!(f(&d["counterexample"]["margin"]) <= 1e-9);
    assert!(d["note"].as_str().unwrap().contains("failure escapes K"));
}

#[test]
fn gallery_by_name_and_listing() {
    let out = run(&["gallery", "--name", "golubitsky_axes"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["passed"], true);
    let list = run(&["gallery", "--list"]);
    let text = String::from_utf8(list.stdout).unwrap();
    for name in ["complex_axes", "golubitsky_axes", "hirsch_circle", "nonclosed_union", "oscillation", "top_dimensional"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn unknown_fixture_exits_one() {
    let out = run(&["gallery", "--name", "no_such_fixture"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("available"));
}

#[test]
fn malformed_json_exits_two_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"m\": 1,\n  \"n\": ]\n}\n").unwrap();
    let out = run(&["check", "--map", path.to_str().unwrap(), "--stratum", &fixture("s2.json"), "--point", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.json:3:"), "{err}");
}

#[test]
fn csv_output_is_rounded_and_flat() {
    let out = run(&["check", "--map", &fixture("parabola.json"), "--stratum", &fixture("s2.json"), "--point", "0", "--out", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let margin = header.iter().position(|h| *h == "margin").unwrap();
    assert_eq!(row[margin], "1");
    let out = run(&["witness", "--in", &fixture("golubitsky_fault.json"), "--out", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("c1_plateau"));
    assert_eq!(lines.count(), 40);
    assert!(text.contains("0.333333333333"));
}
