//! Integration tests driving the compiled binary end to end, including the
//! byte-identical rerun check for the full pipeline.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_defensibility")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// simulate -> extract -> calibrate -> ece -> gate with a fixed seed.
fn pipeline(dir: &Path, seed: &str) {
    run_ok(dir, &["simulate", "--seed", seed, "--out", "fleet.jsonl"]);
    run_ok(dir, &["extract", "--input", "fleet.jsonl", "--out", "pds.jsonl"]);
    run_ok(dir, &[
        "calibrate", "--input", "fleet.jsonl", "--component", "h_w", "--out", "weights.json",
    ]);
    run_ok(dir, &[
        "ece", "--input", "fleet.jsonl", "--weights", "weights.json", "--bins", "10", "--out",
        "ece.json",
    ]);
    run_ok(dir, &["evaluate", "--input", "fleet.jsonl", "--out", "cohorts.json"]);
    run_ok(dir, &["gate", "--input", "cohorts.json", "--out", "gate.json"]);
}

#[test]
fn check_10_pipeline_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "31");
    pipeline(b.path(), "31");
    let artifacts = [
        "fleet.jsonl",
        "fleet.truth.jsonl",
        "fleet.rules.jsonl",
        "pds.jsonl",
        "weights.json",
        "ece.json",
        "cohorts.json",
        "gate.json",
    ];
    let mut identical = true;
    for name in artifacts {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        identical &= x == y;
    }
    println!(
        "check 10 pipeline byte-identical across same-seed reruns: {}",
        if identical { "PASS" } else { "FAIL" }
    );
    assert!(identical);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["gate", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["extract"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["no-such-command"]).status.code(), Some(2));
    // --component accepts only the two entropy slot names
    assert_eq!(
        run(dir.path(), &["calibrate", "--input", "x", "--component", "hw", "--out", "y"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn data_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["ingest", "--input", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn calibrate_degenerate_labels_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["simulate", "--seed", "3", "--out", "fleet.jsonl"]);
    // force every human action to agree with the model action
    let text = fs::read_to_string(dir.path().join("fleet.jsonl")).unwrap();
    let rewritten: String = text
        .lines()
        .map(|line| {
            let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
            v["human_action"] = v["proposed_action"].clone();
            serde_json::to_string(&v).unwrap() + "\n"
        })
        .collect();
    fs::write(dir.path().join("agree.jsonl"), rewritten).unwrap();
    let out = run(dir.path(), &[
        "calibrate", "--input", "agree.jsonl", "--component", "h_w", "--out", "w.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DEGENERATE_LABELS"));
}

#[test]
fn ingest_skips_and_counts_invalid_records() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["simulate", "--seed", "4", "--out", "fleet.jsonl"]);
    let text = fs::read_to_string(dir.path().join("fleet.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    // an out-of-range sampling temperature violates the record schema
    let mut v: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    v["temperature"] = serde_json::json!(5.0);
    lines[0] = serde_json::to_string(&v).unwrap();
    fs::write(dir.path().join("dirty.jsonl"), lines.join("\n")).unwrap();
    let out = run_ok(dir.path(), &[
        "ingest", "--input", "dirty.jsonl", "--out", "ingest.json",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("1 schema violations"), "stdout: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ingest.json")).unwrap()).unwrap();
    assert_eq!(report["schema_violations"], 1);
    assert_eq!(report["total_records"], 800);
    assert_eq!(report["valid_audits"], 799);
}

#[test]
fn extract_emits_columnar_rows() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["simulate", "--seed", "6", "--out", "fleet.jsonl"]);
    run_ok(dir.path(), &["extract", "--input", "fleet.jsonl", "--out", "pds.jsonl"]);
    let text = fs::read_to_string(dir.path().join("pds.jsonl")).unwrap();
    let row: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in [
        "id", "cohort", "lambda_xi", "h_kappa", "h_w", "sigma_rho", "xi_star", "level",
        "inverse_check", "s",
    ] {
        assert!(row.get(key).is_some(), "missing column {key}");
    }
    assert_eq!(text.lines().count(), 800);
}

#[test]
fn gate_reads_scenario_file_and_report_renders() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["simulate", "--seed", "8", "--out", "fleet.jsonl"]);
    run_ok(dir.path(), &["evaluate", "--input", "fleet.jsonl", "--out", "cohorts.json"]);
    let scenarios = serde_json::json!([
        {"di_min": 0.90, "ai_max": 0.15, "min_decisions": 25, "scenario_name": "Standard"},
        {"di_min": 0.0, "ai_max": 1.0, "min_decisions": 1, "scenario_name": "Permissive"},
    ]);
    fs::write(dir.path().join("scenarios.json"), scenarios.to_string()).unwrap();
    run_ok(dir.path(), &[
        "gate", "--input", "cohorts.json", "--scenarios", "scenarios.json", "--out", "gate.json",
    ]);
    let rows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("gate.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[1]["community_coverage"], 1.0);

    let out = run_ok(dir.path(), &[
        "report", "--input", "cohorts.json", "--scenarios", "gate.json",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("COHORT METRICS"));
    assert!(text.contains("SCENARIO SWEEP"));
    assert!(text.contains("Permissive"));
}

#[test]
fn stability_groups_replicates_and_uses_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &[
        "simulate", "--seed", "12", "--replicates", "6", "--temperature", "0.7", "--out",
        "reps.jsonl",
    ]);
    run_ok(dir.path(), &["stability", "--input", "reps.jsonl", "--out", "stab.json"]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stab.json")).unwrap()).unwrap();
    assert_eq!(report["profiles"].as_array().unwrap().len(), 800);
    let sweep = report["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), 1);
    assert!(sweep[0]["sigma_ratio"].as_f64().unwrap() > 1.0);
}

#[test]
fn verify_flags_fabricated_citations() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["simulate", "--seed", "14", "--out", "fleet.jsonl"]);
    // swap in an unmistakably fabricated citation on one record
    let text = fs::read_to_string(dir.path().join("fleet.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let keep: Vec<String> = lines.drain(..1).collect();
    fs::write(dir.path().join("one.jsonl"), keep.join("\n")).unwrap();
    run_ok(dir.path(), &[
        "verify", "--input", "one.jsonl", "--rules", "fleet.rules.jsonl", "--out", "v.jsonl",
    ]);
    let row: serde_json::Value = serde_json::from_str(
        fs::read_to_string(dir.path().join("v.jsonl")).unwrap().lines().next().unwrap(),
    )
    .unwrap();
    // the clean fleet's citations are drawn verbatim from the rules
    assert_eq!(row["overlap"], 1.0);
    assert!(row["matched_rule_id"].as_str().unwrap().contains("rule"));
}
