use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mfee(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfee"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn estimate_empty_input_is_uniform() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "empty.txt", "");
    let alpha = write(&dir, "abc.json", r#"["a","b","c"]"#);
    let v = json(&mfee(&["estimate", "--input", s(&input), "--alphabet", s(&alpha), "--method", "mfee"]));
    assert_eq!(v["beta"], 0.0);
    for p in v["estimate"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
    assert!(v["free_energy"].is_null());
}

#[test]
fn estimate_single_sample() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "one.txt", "a\n");
    let alpha = write(&dir, "abc.json", r#"["a","b","c"]"#);
    let v = json(&mfee(&["estimate", "--input", s(&input), "--alphabet", s(&alpha)]));
    let est: Vec<f64> = v["estimate"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((est[0] - 0.6966).abs() < 1e-4);
    assert!((est[1] - 0.1517).abs() < 1e-4);
    assert!((est[2] - 0.1517).abs() < 1e-4);
}

#[test]
fn estimate_all_methods_and_output_file() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "s.txt", "x\ny\nx\nz\nx\ny\n");
    let out = dir.path().join("out.json");
    let o = mfee(&["estimate", "--input", s(&input), "--method", "all", "--output", s(&out)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let methods: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["ml", "me", "map", "mfee"]);
    for r in v.as_array().unwrap() {
        let total: f64 = r["estimate"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn map_unavailable_exit_code() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "s.txt", "a\na\nb\n");
    let alpha = write(&dir, "abc.json", r#"["a","b","c"]"#);
    let o = mfee(&["estimate", "--input", s(&input), "--alphabet", s(&alpha), "--method", "map"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("unavailable") && err.contains("\"c\""), "{err}");

    let v = json(&mfee(&[
        "estimate", "--input", s(&input), "--alphabet", s(&alpha), "--method", "map", "--allow-unavailable",
    ]));
    assert!(v["estimate"].is_null());
    assert_eq!(v["unavailable_states"][0], "c");
}

#[test]
fn bad_input_exit_codes() {
    let dir = TempDir::new().unwrap();
    let alpha = write(&dir, "ab.json", r#"["a","b"]"#);
    let input = write(&dir, "s.txt", "a\nq\n");
    let o = mfee(&["estimate", "--input", s(&input), "--alphabet", s(&alpha)]);
    assert_eq!(o.status.code(), Some(2));
    let o = mfee(&["estimate", "--input", s(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = mfee(&["estimate", "--input", s(&input), "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = mfee(&["estimate", "--input", s(&input), "--smoothing", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bayes_anchor_flags() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "s.txt", "a\n");
    let alpha = write(&dir, "abc.json", r#"["a","b","c"]"#);
    let v = json(&mfee(&["estimate", "--input", s(&input), "--alphabet", s(&alpha), "--prior-alpha", "0.5"]));
    assert!((v["beta"].as_f64().unwrap() - 0.8736512252624761).abs() < 1e-12);
    let o = mfee(&[
        "estimate", "--input", s(&input), "--alphabet", s(&alpha), "--prior-alpha", "0.5", "--anchor", "mode",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn condition_matches_estimate_for_single_context() {
    let dir = TempDir::new().unwrap();
    let pairs = write(&dir, "p.csv", "context,state\nu,a\nu,b\nu,a\nu,c\n");
    let states = write(&dir, "s.txt", "a\nb\na\nc\n");
    let contexts = write(&dir, "ctx.json", r#"["u","v"]"#);
    let c = json(&mfee(&["condition", "--input", s(&pairs), "--contexts", s(&contexts)]));
    let e = json(&mfee(&["estimate", "--input", s(&states)]));
    assert_eq!(c["rows"][0]["estimate"], e["estimate"]);
    assert_eq!(c["rows"][1]["samples"], 0);
    assert_eq!(c["rows"][1]["beta"], 0.0);
    for p in c["rows"][1]["estimate"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    let g = json(&mfee(&["condition", "--input", s(&pairs), "--contexts", s(&contexts), "--mode", "global"]));
    assert_eq!(g["mode"], "global");
    for row in g["rows"].as_array().unwrap() {
        let t: f64 = row["estimate"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((t - 1.0).abs() < 1e-12);
    }

    let bad = write(&dir, "bad.csv", "u,a\nu\n");
    assert_eq!(mfee(&["condition", "--input", s(&bad)]).status.code(), Some(2));
}

#[test]
fn benchmark_outputs_and_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"sample_sizes":[2,10],"replicates":3,"methods":["ml","map","mfee"]}"#,
    );
    let csv = dir.path().join("out.csv");
    let svg = dir.path().join("out.svg");
    let o = mfee(&["benchmark", "--config", s(&cfg), "--csv", s(&csv), "--svg", s(&svg), "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 4 * 2);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 3 * 4 * 2);
    let rows = mfee_core::bench::parse_csv(&text).unwrap();
    assert_eq!(mfee_core::bench::to_csv_string(&rows), text);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));

    let bad = write(&dir, "bad.json", r#"{"methods":["ml","oracle"]}"#);
    assert_eq!(mfee(&["benchmark", "--config", s(&bad), "--csv", s(&csv)]).status.code(), Some(2));
    let bad = write(&dir, "bad2.json", r#"{"sample_sizes":[0]}"#);
    assert_eq!(mfee(&["benchmark", "--config", s(&bad), "--csv", s(&csv)]).status.code(), Some(2));
}

#[test]
fn diagnose_exit_codes() {
    let dir = TempDir::new().unwrap();
    let uniform = write(&dir, "u.txt", "a\nb\nc\na\nb\nc\n");
    let v = json(&mfee(&["diagnose", "--input", s(&uniform)]));
    for c in v["checks"].as_array().unwrap() {
        assert_eq!(c["passed"], true, "{c}");
        assert!(c["abs_error"].as_f64().unwrap() < 1e-9);
    }

    let skewed = write(&dir, "k.txt", "a\na\nb\na\nc\na\na\nb\n");
    let v = json(&mfee(&["diagnose", "--input", s(&skewed)]));
    assert!(v["beta"].as_f64().unwrap() > 0.0);

    assert_eq!(mfee(&["diagnose", "--input", s(&skewed), "--beta", "1.5"]).status.code(), Some(2));
    assert_eq!(mfee(&["diagnose", "--input", s(&skewed), "--beta", "-0.2"]).status.code(), Some(2));
    assert!(mfee(&["diagnose", "--input", s(&skewed), "--beta", "0.3"]).status.success());
}
