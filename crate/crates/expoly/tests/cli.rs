//! End-to-end tests of the `expoly` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn expoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expoly"))
        .args(args)
        .env_remove("EXPOLY_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const DOUBLE_ROOT: &str = r#"{"dim":1,"components":[{"omega":[[0.6931471805599453,0]],"poly":"1,0:0;1,0:1"}]}"#;
const RAMP: &str = r#"{"dim":1,"components":[{"omega":[[0.6931471805599453,0]],"poly":"1,0:1"}]}"#;

#[test]
fn synth_tabulates_double_root() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", DOUBLE_ROOT);
    let out = expoly(&["synth", "--model", s(&model), "--grid", "box:0..4"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "a1,re,im\n0,1,0\n1,4,0\n2,12,0\n3,32,0\n4,80,0\n");
}

#[test]
fn synth_of_empty_model_is_zero() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", r#"{"dim":1,"components":[]}"#);
    let out = expoly(&["synth", "--model", s(&model), "--grid", "box:0..2"]);
    assert_eq!(stdout(&out), "a1,re,im\n0,0,0\n1,0,0\n2,0,0\n");
}

#[test]
fn synth_constant_plane() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", r#"{"dim":2,"components":[{"omega":[[0,0],[0,0]],"poly":"1,0:0,0"}]}"#);
    let out = expoly(&["synth", "--model", s(&model), "--grid", "box:0..1,0..1"]);
    assert_eq!(stdout(&out), "a1,a2,re,im\n0,0,1,0\n1,0,1,0\n0,1,1,0\n1,1,1,0\n");
}

#[test]
fn duplicate_frequency_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let model = write(
        &dir,
        "m.json",
        r#"{"dim":1,"components":[{"omega":[[0,1]],"poly":"1,0:0"},{"omega":[[0,1]],"poly":"2,0:0"}]}"#,
    );
    assert_eq!(code(&expoly(&["synth", "--model", s(&model), "--grid", "box:0..3"])), 2);
}

/// synth, reconstruct twice, and verify one bundled model.
fn round_trip(name: &str, grid: &str, bound: usize) {
    let dir = TempDir::new().unwrap();
    let model = Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join(name);
    let samples = dir.path().join("f.csv");
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let bound = bound.to_string();
    assert_eq!(code(&expoly(&["synth", "--model", s(&model), "--grid", grid, "--out", s(&samples)])), 0);
    for out in [&first, &second] {
        let r = expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", &bound, "--out", s(out)]);
        assert_eq!(code(&r), 0, "{name}: {}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap(), "{name} not reproducible");
    let v = expoly(&["verify", "--samples", s(&samples), "--model", s(&first)]);
    assert_eq!(code(&v), 0, "{name}: {}", stdout(&v));
    assert!(stdout(&v).ends_with("overall PASS\n"));
}

#[test]
fn bundled_models_round_trip() {
    round_trip("double_root.json", "box:0..10", 4);
    round_trip("tones_1d.json", "box:0..16", 6);
    round_trip("plane_2d.json", "box:0..10", 8);
    round_trip("cube_3d.json", "box:0..7", 5);
}

#[test]
fn recovered_double_root_matches() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", DOUBLE_ROOT);
    let samples = dir.path().join("f.csv");
    expoly(&["synth", "--model", s(&model), "--grid", "box:0..8", "--out", s(&samples)]);
    let out = expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", "3"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let comps = doc["components"].as_array().unwrap();
    assert_eq!(comps.len(), 1);
    assert!((comps[0]["omega"][0][0].as_f64().unwrap() - 2f64.ln()).abs() < 1e-6);
    for term in comps[0]["poly"]["terms"].as_array().unwrap() {
        assert!((term["re"].as_f64().unwrap() - 1.0).abs() < 1e-6);
        assert!(term["im"].as_f64().unwrap().abs() < 1e-6);
    }
    assert_eq!(doc["clusters"][0]["mult"], 2);
    assert_eq!(doc["ideal"]["normal_set"], serde_json::json!([[0], [1]]));
}

#[test]
fn undersized_bound_has_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", DOUBLE_ROOT);
    let samples = dir.path().join("f.csv");
    expoly(&["synth", "--model", s(&model), "--grid", "box:0..8", "--out", s(&samples)]);
    let out = expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", "1"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiplicity bound too small"));
}

#[test]
fn missing_samples_report_coverage() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", DOUBLE_ROOT);
    let samples = dir.path().join("f.csv");
    expoly(&["synth", "--model", s(&model), "--grid", "box:0..2", "--out", s(&samples)]);
    let out = expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", "4"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("the sample box must extend at least to box:0.."));
}

#[test]
fn corrupt_csv_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let samples = write(&dir, "f.csv", "a1,re,im\n0,1,0\n1,four,0\n");
    assert_eq!(code(&expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", "2"])), 2);
    let gaps = write(&dir, "g.csv", "a1,re,im\n0,1,0\n2,4,0\n");
    assert_eq!(code(&expoly(&["reconstruct", "--samples", s(&gaps), "--mult-bound", "2"])), 2);
}

#[test]
fn invalid_settings_are_rejected() {
    let dir = TempDir::new().unwrap();
    let samples = write(&dir, "f.csv", "a1,re,im\n0,1,0\n1,2,0\n");
    assert_eq!(code(&expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", "0"])), 2);
    assert_eq!(
        code(&expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", "1", "--tol", "-1"])),
        2
    );
}

#[test]
fn verify_flags_wrong_kernel() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", RAMP);
    let samples = dir.path().join("f.csv");
    expoly(&["synth", "--model", s(&model), "--grid", "box:0..8", "--out", s(&samples)]);

    let good = expoly(&["verify", "--samples", s(&samples), "--kernel", "4,0:0;-4,0:1;1,0:2"]);
    assert_eq!(code(&good), 0);
    assert_eq!(stdout(&good), "kernel 1 annihilation 0.000e0 PASS\noverall PASS\n");

    let bad = expoly(&["verify", "--samples", s(&samples), "--kernel", "-3,0:0;1,0:1"]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("FAIL"));

    let empty = expoly(&["verify", "--samples", s(&samples)]);
    assert_eq!(code(&empty), 0);
    assert!(stdout(&empty).contains("trivially PASS"));
}

#[test]
fn verify_resynthesizes_the_model() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", RAMP);
    let other = write(&dir, "o.json", DOUBLE_ROOT);
    let samples = dir.path().join("f.csv");
    expoly(&["synth", "--model", s(&model), "--grid", "box:0..5", "--out", s(&samples)]);
    assert_eq!(code(&expoly(&["verify", "--samples", s(&samples), "--model", s(&model)])), 0);
    assert_eq!(code(&expoly(&["verify", "--samples", s(&samples), "--model", s(&other)])), 1);
}

#[test]
fn seed_environment_override_matches_flag() {
    let dir = TempDir::new().unwrap();
    let model = Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join("plane_2d.json");
    let samples = dir.path().join("f.csv");
    expoly(&["synth", "--model", s(&model), "--grid", "box:0..10", "--out", s(&samples)]);
    let by_flag = expoly(&["reconstruct", "--samples", s(&samples), "--mult-bound", "8", "--seed", "17"]);
    let by_env = Command::new(env!("CARGO_BIN_EXE_expoly"))
        .args(["reconstruct", "--samples", s(&samples), "--mult-bound", "8"])
        .env("EXPOLY_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(code(&by_flag), 0);
    assert_eq!(by_flag.stdout, by_env.stdout);
}

#[test]
fn stirling_table_dump() {
    let out = expoly(&["stirling", "--kind", "2", "--table", "--dim", "1", "--max", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("nu1,kappa1,value\n0,0,1\n"));
    assert!(text.contains("\n3,2,3\n"));
    let first = stdout(&expoly(&["stirling", "--kind", "1", "--table", "--dim", "1", "--max", "3"]));
    assert!(first.contains("\n3,2,-3\n"));
    let pairs = stdout(&expoly(&["stirling", "--kind", "first", "--table", "--dim", "2", "--max", "2"]));
    assert_eq!(pairs.lines().count(), 82);
}

#[test]
fn stirling_single_value() {
    let out = expoly(&["stirling", "--kind", "2", "--nu", "3,2", "--kappa", "2,1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "3\n");
    assert_eq!(stdout(&expoly(&["stirling", "--kind", "1", "--nu", "4", "--kappa", "2"])), "11\n");
    assert_eq!(code(&expoly(&["stirling", "--kind", "2", "--nu", "3"])), 2);
    assert_eq!(code(&expoly(&["stirling", "--kind", "2", "--nu", "3", "--kappa", "1,1"])), 2);
}
