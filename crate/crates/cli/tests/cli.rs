use std::path::Path;
use std::process::{Command, Output};

use rampflex::grid::GridModel;
use rampflex::risk::synthetic::{skewed_errors, BandMoments};
use rampflex::risk::{write_samples_csv, Band};

fn rampflex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rampflex"))
        .args(args)
        .env_remove("RAMPFLEX_TOLERANCES")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn skewed_samples_file(dir: &Path) -> std::path::PathBuf {
    let m = BandMoments { band: Band::Mid, mean: -4.0, std_dev: 15.0, skew: -0.6 };
    let recs: Vec<(f64, f64)> = skewed_errors(m, 2000, 5).into_iter().map(|e| (1000.0, 1000.0 + e)).collect();
    let path = dir.join("samples.csv");
    std::fs::write(&path, write_samples_csv(&recs)).unwrap();
    path
}

#[test]
fn dispatch_golden_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.json");
    let o = rampflex(&["dispatch", "--model", "threebus", "--fu", "0", "--fd", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["objective"], 12400.0);
    assert_eq!(v["g"], serde_json::json!([[100.0, 100.0], [0.0, 0.0], [10.0, 20.0]]));
}

#[test]
fn dispatch_exit_codes() {
    assert_eq!(rampflex(&["dispatch", "--fu", "-1"]).status.code(), Some(1));
    assert_eq!(rampflex(&["dispatch", "--fu", "1e9"]).status.code(), Some(2));
    assert_eq!(rampflex(&["dispatch", "--model", "nonexistent.json"]).status.code(), Some(1));
}

#[test]
fn dispatch_accepts_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    std::fs::write(&model, rampflex::models::garver6().to_json()).unwrap();
    let o = rampflex(&["dispatch", "--model", model.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("generator,t,g,r_up,r_down\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}

#[test]
fn surface_summary_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = rampflex(&["surface", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary = String::from_utf8(o.stderr).unwrap();
    assert!(summary.contains("free ramping: up 30 MW, down 40 MW"), "{summary}");
    assert!(summary.contains("max cost: 15200 at (50, 70)"), "{summary}");
    let v = json(&out);
    assert_eq!(v["free_up"], 30.0);
    assert_eq!(v["free_down"], 40.0);
    let tris = v["triangles"].as_array().unwrap().len();
    assert!(summary.contains(&format!("triangles: {tris}")));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert!(rampflex(&["surface", "--model", "garver6", "--out", p.to_str().unwrap()]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn contour_csv_round_trips() {
    let o = rampflex(&["contour", "--levels", "2", "--format", "csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<(f64, f64, f64)> = rdr.deserialize().map(Result::unwrap).collect();
    let levels: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.0.to_bits()).collect();
    assert_eq!(levels.len(), 2);
    assert_eq!(rows[0], (12400.0, 30.0, 0.0));
    assert_eq!(rampflex(&["contour", "--levels", "1"]).status.code(), Some(1));
}

#[test]
fn risk_zero_confidence_is_free() {
    let dir = tempfile::tempdir().unwrap();
    let samples = skewed_samples_file(dir.path());
    let o = rampflex(&["risk", "--samples", samples.to_str().unwrap(), "--p", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["f_u"], 0.0);
    assert_eq!(v["f_d"], 0.0);
    assert_eq!(v["ds"], 0.0);
}

#[test]
fn risk_beats_greedy_on_skewed_samples() {
    let dir = tempfile::tempdir().unwrap();
    let samples = skewed_samples_file(dir.path());
    let out = dir.path().join("r.json");
    let o = rampflex(&["risk", "--samples", samples.to_str().unwrap(), "--p", "0.99", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert!(v["confidence"].as_f64().unwrap() >= 0.99);
    assert!(v["cost"].as_f64().unwrap() <= v["greedy"]["cost"].as_f64().unwrap() + 1e-6);
}

#[test]
fn risk_band_selection() {
    let dir = tempfile::tempdir().unwrap();
    let samples = skewed_samples_file(dir.path());
    let s = samples.to_str().unwrap();
    let ok = rampflex(&["risk", "--samples", s, "--p", "0.9", "--band", "low", "--capacity", "4500"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let empty = rampflex(&["risk", "--samples", s, "--p", "0.9", "--band", "high", "--capacity", "4500"]);
    assert_eq!(empty.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("no samples in output band"));
}

#[test]
fn risk_input_errors() {
    assert_eq!(rampflex(&["risk", "--samples", "/nonexistent/samples.csv", "--p", "0.9"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let samples = skewed_samples_file(dir.path());
    assert_eq!(rampflex(&["risk", "--samples", samples.to_str().unwrap(), "--p", "1.5"]).status.code(), Some(1));
}

#[test]
fn tolerance_overrides_are_validated() {
    let o = rampflex(&["--tolerances", "feas=abc", "dispatch"]);
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_rampflex"))
        .args(["dispatch"])
        .env("RAMPFLEX_TOLERANCES", "feas=1e-8,val=1e-7")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn exported_model_reloads() {
    let m = rampflex::models::three_bus();
    assert_eq!(GridModel::from_json(&m.to_json()).unwrap(), m);
}
