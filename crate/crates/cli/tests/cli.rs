//! End-to-end runs of the `bushing` binary at small scale.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bushing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bushing"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bushing(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_INCREMENTAL: &str = r#"
kind = "incremental-level1"
seed = 3

[data]
train_size = 300
validation_size = 200

[databases]
sizes = [60, 60, 60, 60, 60]

[session]
hypotheses = 5
"#;

fn incremental(dir: &Path) -> Value {
    let cfg = write_config(dir, "inc.toml", SMALL_INCREMENTAL);
    let out = dir.join("out");
    ok(&[
        "incremental",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    json(&out.join("report.json"))
}

#[test]
fn generated_files_feed_an_incremental_run() {
    let dir = tempfile::tempdir().unwrap();
    let gen = write_config(
        dir.path(),
        "gen.toml",
        "kind = \"gen-data\"\nseed = 3\n[data]\ntrain_size = 300\nvalidation_size = 200\n",
    );
    let data = dir.path().join("data");
    let stdout = ok(&[
        "gen-data",
        "--config",
        &gen,
        "--out",
        data.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["train_samples"], 300);
    assert_eq!(summary["validation_samples"], 200);
    let header = fs::read_to_string(data.join("train.csv")).unwrap();
    assert_eq!(header.lines().count(), 301);

    let body = format!("{SMALL_INCREMENTAL}\n[weak_learner]\nhidden = 4\n",).replace(
        "[data]\ntrain_size = 300\nvalidation_size = 200",
        "[data]\ntrain = \"data/train.csv\"\nvalidation = \"data/validation.csv\"",
    );
    let cfg = write_config(dir.path(), "files.toml", &body);
    let text = ok(&["incremental", "--config", &cfg]);
    assert!(text.contains("accuracy (%) by training session"));
    assert!(text.contains("validation"));
}

#[test]
fn structured_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let r = incremental(dir.path());
    assert_eq!(r["format"], "bushing-report");
    assert_eq!(r["experiment"], "incremental-level1");
    assert_eq!(r["classes"], serde_json::json!(["Normal", "Faulty"]));
    assert_eq!(r["database_sizes"], serde_json::json!([60, 60, 60, 60, 60]));
    assert_eq!(r["validation_size"], 200);
    let matrix = r["accuracy_matrix"].as_array().unwrap();
    assert_eq!(matrix.len(), 5);
    for (s, row) in matrix.iter().enumerate() {
        assert_eq!(row.as_array().unwrap().len(), s + 1);
    }
    for key in [
        "validation_accuracy",
        "mean_correct_confidence",
        "class_confidence",
        "class_recall",
        "boosting",
        "train_seconds",
    ] {
        assert_eq!(r[key].as_array().unwrap().len(), 5, "{key}");
    }
    for b in r["boosting"].as_array().unwrap() {
        assert_eq!(b["hypotheses"], 5);
    }
    let out = dir.path().join("out");
    for k in 1..=5 {
        assert!(out.join(format!("ensemble_session{k}.json")).is_file());
    }

    let inspect = ok(&[
        "inspect-model",
        out.join("ensemble.json").to_str().unwrap(),
        "--format",
        "structured",
    ]);
    let m: Value = serde_json::from_str(&inspect).unwrap();
    assert_eq!(m["kind"], "learnpp");
    assert_eq!(m["level"], "level1");
    assert_eq!(m["session_hypotheses"], serde_json::json!([5, 5, 5, 5, 5]));
    assert_eq!(m["feature_order"].as_array().unwrap().len(), 10);
}

#[test]
fn reruns_are_identical_apart_from_timings() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ra = incremental(a.path());
    let mut rb = incremental(b.path());
    ra.as_object_mut().unwrap().remove("train_seconds");
    rb.as_object_mut().unwrap().remove("train_seconds");
    assert_eq!(ra, rb);
    let sa = fs::read(a.path().join("out/ensemble.json")).unwrap();
    let sb = fs::read(b.path().join("out/ensemble.json")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn batch_snapshots_drive_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
kind = "batch-compare"
seed = 5

[data]
train_size = 300
validation_size = 100

[batch]
max_iterations = 50
hidden_candidates = [4]
center_candidates = [8]
rbf_width_rules = ["max-center-distance"]
svm_c = [1.0]
svm_widths = []
folds = 2
"#;
    let cfg = write_config(dir.path(), "batch.toml", body);
    let out = dir.path().join("out");
    let stdout = ok(&[
        "batch-compare",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    for column in [
        "Accuracy",
        "Specificity",
        "Sensitivity",
        "Training Time(s)",
        "Classification Time(s)",
    ] {
        assert!(stdout.contains(column), "missing column {column}");
    }
    let l1 = out.join("level1_mlp.json");
    let l2 = out.join("level2_mlp.json");
    assert!(l1.is_file() && l2.is_file());

    let gen = write_config(
        dir.path(),
        "gen.toml",
        "kind = \"gen-data\"\nseed = 8\n[data]\ntrain_size = 10\nvalidation_size = 10\n",
    );
    let data = dir.path().join("data");
    ok(&[
        "gen-data",
        "--config",
        &gen,
        "--out",
        data.to_str().unwrap(),
    ]);
    let csv = data.join("validation.csv");
    let stdout = ok(&[
        "diagnose",
        "--input",
        csv.to_str().unwrap(),
        "--row",
        "2",
        "--level1",
        l1.to_str().unwrap(),
        "--level2",
        l2.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    let d: Value = serde_json::from_str(&stdout).unwrap();
    let diag = &d["diagnosis"];
    let g1: Vec<f64> = serde_json::from_value(diag["level1_confidence"].clone()).unwrap();
    assert!((g1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    match diag["level1"].as_str().unwrap() {
        "Normal" => assert!(diag["level2"].is_null()),
        "Faulty" => assert!(diag["level2"].is_string()),
        other => panic!("unexpected level-1 label {other}"),
    }

    // levels swapped
    let swapped = bushing(&[
        "diagnose",
        "--input",
        csv.to_str().unwrap(),
        "--level1",
        l2.to_str().unwrap(),
        "--level2",
        l1.to_str().unwrap(),
    ]);
    assert!(!swapped.status.success());
}

fn fails_with(args: &[&str], needle: &str) {
    let out = bushing(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains(needle),
        "stderr `{stderr}` lacks `{needle}`"
    );
}

#[test]
fn bad_invocations_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    fails_with(&["incremental"], "seed is required");

    let unknown = write_config(
        dir.path(),
        "unknown.toml",
        "kind = \"incremental-level1\"\nseed = 1\nbogus = 2\n",
    );
    fails_with(&["incremental", "--config", &unknown], "bogus");

    let mismatch = write_config(
        dir.path(),
        "mismatch.toml",
        "kind = \"batch-baseline\"\nseed = 1\n",
    );
    fails_with(&["incremental", "--config", &mismatch], "does not match");

    let sizes = write_config(
        dir.path(),
        "sizes.toml",
        "kind = \"incremental-level1\"\nseed = 1\n[databases]\nsizes = [0]\n",
    );
    fails_with(&["incremental", "--config", &sizes], "database sizes");

    let missing = dir.path().join("nope.json");
    fails_with(&["inspect-model", missing.to_str().unwrap()], "nope.json");

    let bogus = dir.path().join("bogus.json");
    fs::write(&bogus, "{\"format\": \"other\"}").unwrap();
    fails_with(&["inspect-model", bogus.to_str().unwrap()], "json");
}
