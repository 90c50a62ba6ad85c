use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lqnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = lqnet(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = lqnet(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    assert_eq!(lqnet(&["solve", "--bogus"]).status.code(), Some(2));
}

#[test]
fn unknown_treatment_exits_1() {
    let out = lqnet(&["solve", "--treatment", "N7_Nope", "--network", "complete"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N7_Nope"));
}

#[test]
fn solve_complete_network() {
    let r = json(&["solve", "--treatment", "N5_LowCost", "--network", "complete"]);
    for x in r["efforts"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 25.0 / 6.0).abs() < 1e-9);
    }
}

#[test]
fn explicit_parameters_override_the_preset() {
    let r = json(&["solve", "--treatment", "N5_LowCost", "--lambda", "0.2", "--network", "complete"]);
    // theta / (beta - lambda (n - 1))
    let x = r["efforts"][0].as_f64().unwrap();
    assert!((x - 10.0 / 3.2).abs() < 1e-9);
}

#[test]
fn enumerate_lists_three_architectures() {
    let r = json(&["enumerate", "--treatment", "N5_HighCost"]);
    let labels: Vec<&str> = r["supportable"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels.len(), 3);
    for l in ["Empty", "Star", "Complete"] {
        assert!(labels.contains(&l), "{labels:?}");
    }
}

#[test]
fn verify_reads_a_profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.json");
    fs::write(&path, r#"{"n": 5, "efforts": [2.5, 2.5, 2.5, 2.5, 2.5], "intents": []}"#).unwrap();
    let p = path.to_str().unwrap();
    let high = json(&["verify", "--treatment", "N5_HighCost", "--profile", p]);
    assert_eq!(high["is_nash"], true);
    let low = json(&["verify", "--treatment", "N5_LowCost", "--profile", p]);
    assert_eq!(low["is_nash"], false);
    assert_eq!(low["worst_deviation"]["intents"].as_array().unwrap().len(), 4);
}

#[test]
fn classify_reports_one_based_core() {
    let r = json(&["classify", "--network", "star", "--n", "5"]);
    assert_eq!(r["label"], "Star");
    assert_eq!(r["core"], serde_json::json!([1]));
}

#[test]
fn thresholds_bracket_the_high_cost_treatment() {
    let r = json(&["thresholds", "--treatment", "N5_HighCost", "--grid", "100"]);
    let k1 = r["kappa1"].as_f64().unwrap();
    let k2 = r["kappa2"].as_f64().unwrap();
    assert!(k1 < 3.9 && 3.9 < k2, "{k1} {k2}");
}

fn simulate_into(dir: &Path, config: &Path) {
    let out = lqnet(&["simulate", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_then_analyze_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    fs::write(
        &config,
        r#"
treatment = "N9_LowCost1"
periods = 20
replications = 3
seed = 11

[policy.effort]
kind = "preset"
noise_sd = 0.5

[policy.links]
kind = "rank_top"
k = 4

[[agents]]
id = 9
effort = { kind = "myopic" }
links = { kind = "benefit_threshold" }
"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    simulate_into(&a, &config);
    simulate_into(&b, &config);
    for k in 0..3 {
        for ext in ["csv", "json"] {
            let name = format!("session_{k:04}.{ext}");
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name}");
        }
    }
    let ra = json(&["analyze", "--in", a.to_str().unwrap(), "--treatment", "N9_LowCost1"]);
    let rb = json(&["analyze", "--in", b.to_str().unwrap(), "--treatment", "N9_LowCost1"]);
    assert_eq!(ra["summary"], rb["summary"]);
    assert_eq!(ra["efficiency"], rb["efficiency"]);
    assert_eq!(
        fs::read(a.join("summary_last10.csv")).unwrap(),
        fs::read(b.join("summary_last10.csv")).unwrap()
    );
    let rel = ra["efficiency"]["relative_efficiency"].as_f64().unwrap();
    assert!(rel > 0.0 && rel < 1.0, "{rel}");
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(
        &config,
        "treatment = \"N5_LowCost\"\n[policy.links]\nkind = \"rank_top\"\nk = 7\n",
    )
    .unwrap();
    let out = lqnet(&["simulate", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("links.k"), "{msg}");
}
