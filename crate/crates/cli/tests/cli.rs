//! Command-level behavior: validation summaries, report contents, channel
//! selection, seed override, and incremental audits.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fitness")
}

struct CliRun {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_cli(args: &[&str]) -> CliRun {
    let out = Command::new(env!("CARGO_BIN_EXE_pigou"))
        .args(args)
        .output()
        .expect("spawn pigou");
    CliRun {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn fitness_config(dir: &Path, output: &Path, channels: &str, mode: &str) -> PathBuf {
    let fixtures = fixture_dir();
    write_config(
        dir,
        &format!(
            r#"{{
  "schema_path": "{}",
  "data_path": "{}",
  "channels": {channels},
  "estimator": {{ "seed": 7 }},
  "policy": {{ "c_p": 0.01, "lambda": 2.0, "lambda_grid": [0.0, 1.0, 2.0], "currency": "EUR" }},
  "mode": {mode},
  "output_path": "{}"
}}
"#,
            fixtures.join("schema.json").display(),
            fixtures.join("records.csv").display(),
            output.display(),
        ),
    )
}

#[test]
fn validate_passes_on_shipped_fixture() {
    let run = run_cli(&[
        "validate",
        "--config",
        fixture_dir().join("run.json").to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let summary: Value = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(summary["ok"], Value::Bool(true));
    assert_eq!(summary["errors"].as_array().unwrap().len(), 0);
    assert_eq!(summary["row_count"], Value::from(6000));
    assert_eq!(summary["channels"].as_array().unwrap().len(), 3);
}

#[test]
fn validate_reports_unknown_level_with_row() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("schema.json"),
        r#"{
  "protected_dims": [{ "name": "group", "levels": ["a", "b"] }],
  "feature_channels": [{ "name": "chan", "kind": "categorical" }]
}"#,
    )
    .unwrap();
    let mut csv = String::from("group,chan\n");
    for i in 0..35 {
        csv.push_str(if i == 20 { "zzz,x\n" } else { "a,x\n" });
    }
    std::fs::write(dir.join("records.csv"), csv).unwrap();
    let cfg = write_config(
        dir,
        r#"{ "schema_path": "schema.json", "data_path": "records.csv" }"#,
    );
    let run = run_cli(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.code, 2);
    let summary: Value = serde_json::from_str(&run.stdout).unwrap();
    let errors = summary["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0]["code"], "UNKNOWN_LEVEL");
    assert_eq!(errors[0]["row"], Value::from(21));
}

#[test]
fn estimate_reports_planted_structure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("leakage.json");
    let cfg = fitness_config(tmp.path(), &out, "\"all\"", "\"marginal\"");
    let run = run_cli(&["estimate", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(run.code, 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["kind"], "leakage");
    let channels = report["channels"].as_array().unwrap();
    assert_eq!(channels.len(), 3);
    let by_name = |name: &str| {
        channels
            .iter()
            .find(|c| c["channel"] == name)
            .unwrap_or_else(|| panic!("channel {name} missing"))
    };
    // the planted early-morning habit leaks; the battery level does not
    assert!(by_name("open_hour")["mi_reported_bits"].as_f64().unwrap() > 0.1);
    assert!(by_name("plan_tier")["mi_reported_bits"].as_f64().unwrap() > 0.0);
    assert_eq!(
        by_name("battery_pct")["mi_reported_bits"].as_f64().unwrap(),
        0.0
    );
}

#[test]
fn estimate_respects_channel_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("leakage.json");
    let cfg = fitness_config(tmp.path(), &out, r#"["plan_tier"]"#, "\"marginal\"");
    let run = run_cli(&["estimate", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(run.code, 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let channels = report["channels"].as_array().unwrap();
    assert_eq!(channels.len(), 1);
    assert_eq!(channels[0]["channel"], "plan_tier");
}

#[test]
fn price_totals_match_definition_and_sweep_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("valuation.json");
    let cfg = fitness_config(tmp.path(), &out, "\"all\"", "\"marginal\"");
    let run = run_cli(&["price", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(run.code, 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["kind"], "valuation");
    let c_p = report["policy"]["c_p"].as_f64().unwrap();
    let lambda = report["policy"]["lambda"].as_f64().unwrap();
    for ch in report["channels"].as_array().unwrap() {
        let mi = ch["mi_reported_bits"].as_f64().unwrap();
        let total = ch["total"].as_f64().unwrap();
        // serialized totals are rounded at 6 dp; recompute within that grain
        assert!(
            (total - (c_p + lambda * mi)).abs() <= 5e-7,
            "total {total} vs definition {}",
            c_p + lambda * mi
        );
    }
    for row in report["sweep"]["channels"].as_array().unwrap() {
        let totals: Vec<f64> = row["totals"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert!(totals.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("leakage.json");
    let cfg = fitness_config(tmp.path(), &out, "\"all\"", "\"marginal\"");
    let run = run_cli(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "99",
        "--quiet",
    ]);
    assert_eq!(run.code, 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["seed"], Value::from(99));
}

#[test]
fn incremental_audit_shows_redundant_channel_as_free() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // planted duplicate: `echo` is an exact copy of `signal`
    std::fs::write(
        dir.join("schema.json"),
        r#"{
  "protected_dims": [{ "name": "group", "levels": ["a", "b", "c"] }],
  "feature_channels": [
    { "name": "signal", "kind": "categorical" },
    { "name": "echo", "kind": "categorical" }
  ]
}"#,
    )
    .unwrap();
    let mut csv = String::from("group,signal,echo\n");
    for i in 0..300 {
        let g = ["a", "b", "c"][i % 3];
        let v = (i % 3).to_string();
        csv.push_str(&format!("{g},s{v},s{v}\n"));
    }
    std::fs::write(dir.join("records.csv"), csv).unwrap();
    let out = dir.join("report.json");
    let cfg = write_config(
        dir,
        &format!(
            r#"{{
  "schema_path": "schema.json",
  "data_path": "records.csv",
  "estimator": {{ "seed": 3 }},
  "policy": {{ "c_p": 0.01, "lambda": 2.0 }},
  "mode": {{ "incremental": {{ "order": ["signal", "echo"] }} }},
  "output_path": "{}"
}}"#,
            out.display()
        ),
    );
    let run = run_cli(&["audit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.code, 0, "stdout: {}\nstderr: {}", run.stdout, run.stderr);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["mode"], "incremental");
    let steps = report["incremental"]["steps"].as_array().unwrap();
    let first = steps[0]["conditional_mi_bits"].as_f64().unwrap();
    let second = steps[1]["conditional_mi_bits"].as_f64().unwrap();
    assert!(first > 1.0, "first disclosure carries the information");
    assert_eq!(second, 0.0, "a redundant disclosure adds nothing");
    // per-step leakage decreases for the redundant channel
    assert!(second < first);
    // and the printed summary carries the incremental table
    assert!(run.stdout.contains("incremental disclosure"));
    // summary artifact exists next to the report
    assert!(out.with_extension("txt").exists());
}

#[test]
fn one_failing_channel_does_not_abort_the_others() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("schema.json"),
        r#"{
  "protected_dims": [{ "name": "group", "levels": ["a", "b"] }],
  "feature_channels": [
    { "name": "good", "kind": "categorical" },
    { "name": "hollow", "kind": "categorical" }
  ]
}"#,
    )
    .unwrap();
    let mut csv = String::from("group,good,hollow\n");
    for i in 0..200 {
        let g = ["a", "b"][i % 2];
        csv.push_str(&format!("{g},x{},\n", i % 2));
    }
    std::fs::write(dir.join("records.csv"), csv).unwrap();
    let out = dir.join("leakage.json");
    let cfg = write_config(
        dir,
        &format!(
            r#"{{ "schema_path": "schema.json", "data_path": "records.csv", "estimator": {{ "seed": 1 }}, "output_path": "{}" }}"#,
            out.display()
        ),
    );
    let run = run_cli(&["estimate", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(run.code, 4, "a failed channel makes the run exit 4");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let channels = report["channels"].as_array().unwrap();
    assert_eq!(channels.len(), 1);
    assert_eq!(channels[0]["channel"], "good");
    let failures = report["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0]["channel"], "hollow");
    assert_eq!(failures[0]["code"], "TOO_FEW_ROWS");
}

#[test]
fn quiet_suppresses_summary_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("report.json");
    let cfg = fitness_config(tmp.path(), &out, "\"all\"", "\"marginal\"");
    let run = run_cli(&["audit", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.is_empty());
    assert!(run.stderr.is_empty());
}

#[test]
fn unknown_channel_in_selection_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("report.json");
    let cfg = fitness_config(tmp.path(), &out, r#"["no_such_channel"]"#, "\"marginal\"");
    let run = run_cli(&["estimate", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(run.code, 2);
    assert!(run.stdout.contains("UNKNOWN_CHANNEL"));
    assert!(!out.exists());
}

#[test]
fn missing_config_flag_is_a_usage_error() {
    let run = run_cli(&["validate"]);
    assert_eq!(run.code, 2);
}
