//! End-to-end runs of the `gasket` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gasket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasket")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn value_at(doc: &Value, address: &str) -> f64 {
    doc["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["address"] == address)
        .unwrap_or_else(|| panic!("{address} missing"))["value"]
        .as_f64()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn info_counts_vertices() {
    let out = gasket(&["info", "sg3", "-n", "6"]);
    assert_eq!(code(&out), 0);
    let last = stdout(&out).lines().last().unwrap().split_whitespace().map(str::to_string).collect::<Vec<_>>();
    assert_eq!(last, ["6", "1095", "729", "2187"]);
    let json = gasket(&["info", "sg3", "-n", "3", "--format", "json"]);
    let doc: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(doc["levels"][3]["vertices"], 42);
    assert_eq!(doc["config"]["level"], 3);
}

#[test]
fn resistance_between_corners() {
    let out = gasket(&["resistance", "sg3", "q0", "q1", "-n", "3"]);
    assert_eq!(code(&out), 0);
    let r: f64 = stdout(&out).trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((r - 2.0 / 3.0).abs() < 1e-12);
    // non-canonical spellings are canonicalized
    let out = gasket(&["resistance", "sg3", "w1:0", "w00:1", "-n", "3", "--format", "json"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["pairs"][0]["p"], "w0:1");
    assert_eq!(doc["pairs"][0]["q"], "w00:1");
}

#[test]
fn green_slice_at_a_boundary_point_vanishes() {
    let out = gasket(&["green", "sg3", "--at", "q0", "-n", "3", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "# seed=0"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 42);
    for row in rows {
        let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(value, 0.0, "{row}");
    }
    let out = gasket(&["green", "sg3", "--at", "w0:1", "-n", "3"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(value_at(&doc, "w0:1") > 0.0);
}

#[test]
fn harmonic_solve_has_the_two_fifths_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let out = gasket(&["solve", "sg3", "-n", "4", "--boundary", "1,0,0", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = read_json(&path);
    assert!((value_at(&doc, "w0:1") - 0.4).abs() < 1e-12);
    assert!((value_at(&doc, "w0:2") - 0.4).abs() < 1e-12);
    assert!((value_at(&doc, "w1:2") - 0.2).abs() < 1e-12);
    assert_eq!(value_at(&doc, "q0"), 1.0);
    assert_eq!(doc["config"]["seed"], 0);
    assert_eq!(doc["config"]["level"], 4);
    assert!(doc["config"]["tolerances"]["solve_residual"].as_f64().is_some());
    assert_eq!(doc["vertices"].as_array().unwrap().len(), 123);
}

#[test]
fn zero_data_gives_zero() {
    let out = gasket(&["solve", "sg3", "-n", "2", "--boundary", "0,0,0", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("address,x,y,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.ends_with(",0.0000000000000000e0")));
}

#[test]
fn both_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write(dir.path(), "mu.json", r#"{"self_similar": [{"cell_word": "", "coefficient": 1.0}]}"#);
    let out_path = dir.path().join("u.json");
    let out = gasket(&[
        "solve", "sg3", "-n", "4", "--boundary", "1,1,1", "--nu", &mu, "--method", "both", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let direct = read_json(&dir.path().join("u.direct.json"));
    let picard = read_json(&dir.path().join("u.picard.json"));
    assert_eq!(direct["method"], "direct");
    assert_eq!(picard["method"], "picard");
    let kappa = picard["contraction_factor"].as_f64().unwrap();
    assert!(kappa > 0.0 && kappa < 1.0);
    let (a, b) = (direct["vertices"].as_array().unwrap(), picard["vertices"].as_array().unwrap());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x["address"], y["address"]);
        assert!((x["value"].as_f64().unwrap() - y["value"].as_f64().unwrap()).abs() < 1e-8);
    }
    // with ν ≥ 0 and σ = 0 the solution lies below its boundary values
    assert!(a.iter().all(|v| v["value"].as_f64().unwrap() <= 1.0 + 1e-12));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = write(dir.path(), "s.json", r#"{"atoms": [{"word": "0", "label": 1, "mass": 0.3}]}"#);
    let nu = write(dir.path(), "nu.json", r#"{"self_similar": [{"cell_word": "2", "coefficient": 4.0}]}"#);
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = gasket(&[
            "solve", "sg3", "-n", "3", "--boundary", "0.5,-1,0.25", "--sigma", &sigma, "--nu", &nu, "--method",
            "picard", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
    let verify = |name: &str| {
        let p = dir.path().join(name);
        let out = gasket(&["verify", "sg3", "mp", "-n", "3", "--count", "30", "--seed", "11", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        std::fs::read(p).unwrap()
    };
    let (a, b) = (verify("r1.json"), verify("r2.json"));
    assert_eq!(a, b);
    let doc: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["config"]["seed"], 11);
    assert_eq!(doc["verdict"], "pass");
}

#[test]
fn maximum_principle_suite_passes() {
    let out = gasket(&["verify", "sg3", "mp", "-n", "5", "--count", "1000", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("instances=1000 passed=1000 failed=0"));
    let out = gasket(&["verify", "sg3", "strong-mp", "-n", "4", "--count", "200", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn harnack_constants_are_stable_across_levels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("harnack.json");
    let out = gasket(&[
        "verify", "sg3", "harnack", "-n", "4,5,6", "--count", "200", "--seed", "7", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let doc = read_json(&path);
    assert_eq!(doc["config"]["levels"], serde_json::json!([4, 5, 6]));
    let series = doc["series"].as_array().unwrap();
    assert_eq!(series.len(), 3);
    for s in series {
        assert!(s["spread"].as_f64().unwrap() < 0.05);
        let estimates = s["estimates"].as_array().unwrap();
        assert_eq!(estimates.len(), 3);
        assert!(estimates.iter().all(|e| e["constant"].as_f64().unwrap() >= 1.0));
    }
}

#[test]
fn hopf_and_equicontinuity_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hopf.json");
    let out = gasket(&["verify", "sg3", "hopf", "--count", "50", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let doc = read_json(&path);
    assert_eq!(doc["failed"], 0);
    assert!(doc["inconclusive_instances"].is_array());
    let out = gasket(&["verify", "sg3", "equicontinuity", "-n", "4", "--count", "30", "--pairs", "100"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn blowup_runs_solve_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let out = gasket(&["solve", "sg3", "-n", "3", "--boundary", "1,0,0", "--blowup", "01", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = read_json(&path);
    assert!((doc["blowup"]["resistance_scale"].as_f64().unwrap() - 0.36).abs() < 1e-15);
    assert_eq!(doc["blowup"]["reversal"], "10");
    // harmonic data is unaffected by the energy scale
    assert!((value_at(&doc, "w0:1") - 0.4).abs() < 1e-12);
    // coordinates are those of K_m, which is 1/0.25 times larger
    let x = doc["vertices"].as_array().unwrap().iter().map(|v| v["x"].as_f64().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let y = doc["vertices"].as_array().unwrap().iter().map(|v| v["x"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert!((x - y - 4.0).abs() < 1e-12);
    let out = gasket(&["verify", "sg3", "mp", "-n", "4", "--count", "100", "--blowup", "12"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["verify", "sg3", "bogus"][..],
        &["resistance", "sg3", "q0", "x1", "-n", "2"],
        &["resistance", "sg3", "q0", "q9", "-n", "2"],
        &["green", "sg3", "--at", "w012:1", "-n", "2"],
        &["info", "sg3", "-n", "13"],
        &["solve", "sg3", "-n", "2", "--boundary", "1,0"],
        &["solve", "sg3", "-n", "2", "--nu", "/nonexistent/nu.json"],
        &["solve", "sg3", "-n", "2", "--method", "both"],
        &["solve", "/nonexistent/fractal.json", "-n", "2"],
        &["solve", "sg3", "-n", "2", "--blowup", "3"],
        &["verify", "sg3", "mp", "-n", "3,4"],
        &[],
    ] {
        let out = gasket(args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
    assert_eq!(code(&gasket(&["--help"])), 0);
}

#[test]
fn non_contractive_picard_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let nu = write(dir.path(), "big.json", r#"{"self_similar": [{"cell_word": "", "coefficient": 100.0}]}"#);
    let out = gasket(&["solve", "sg3", "-n", "4", "--boundary", "1,1,1", "--nu", &nu, "--method", "picard"]);
    assert_eq!(code(&out), 3);
    let msg = stderr(&out);
    assert!(msg.contains("kappa = 6.666667"), "{msg}");
    assert!(msg.contains("certified at depth"), "{msg}");
    // the direct method handles the same problem
    let out = gasket(&["solve", "sg3", "-n", "4", "--boundary", "1,1,1", "--nu", &nu]);
    assert_eq!(code(&out), 0);
}

#[test]
fn unstable_harnack_estimate_exits_with_two() {
    // at level 2 a very large potential drives the discrete solution negative
    let dir = tempfile::tempdir().unwrap();
    let nu = write(dir.path(), "huge.json", r#"{"self_similar": [{"cell_word": "", "coefficient": 2000.0}]}"#);
    let path = dir.path().join("h.json");
    let out = gasket(&[
        "verify", "sg3", "harnack", "-n", "2,5", "--count", "20", "--nu", &nu, "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", stdout(&out));
    assert!(stderr(&out).contains("unstable"));
    let doc = read_json(&path);
    assert_eq!(doc["verdict"], "fail");
    assert_eq!(doc["series"][0]["estimates"][0]["verdict"], "fail");
}

#[test]
fn custom_fractal_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sg.json",
        r#"{"arity": 3, "boundary_size": 3,
            "gluings": [[0, 1, 1, 0], [0, 2, 2, 0], [1, 2, 2, 1]],
            "measure_weights": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334],
            "harmonic": {"conductances": [[0, 1, 1], [1, 0, 1], [1, 1, 0]], "renormalization": [0.6, 0.6, 0.6]}}"#,
    );
    let out = gasket(&["resistance", &spec, "q0", "q2", "-n", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("0.666666666666666"));
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"arity": 3, "boundary_size": 3, "gluings": [[0, 1, 1, 0], [0, 2, 2, 0], [1, 2, 2, 1]],
            "measure_weights": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334],
            "harmonic": {"conductances": [[0, 1, 1], [1, 0, 1], [1, 1, 0]], "renormalization": [0.5, 0.5, 0.5]}}"#,
    );
    let out = gasket(&["info", &bad, "-n", "2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("invalid structure"), "{}", stderr(&out));
}
