//! End-to-end checks of the `uavids` binary: exit codes, artifacts, caching.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn uavids(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavids"))
        .args(args)
        .arg("--log=warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small synthetic dataset plus a fast configuration in `dir`.
fn small_run(dir: &Path, rows: usize) -> PathBuf {
    let data = dir.join("data.csv");
    let out = uavids(&["synth", "--out", data.to_str().unwrap(), "--rows", &rows.to_string(), "--seed", "11"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    fs::write(
        dir.join("baselines.csv"),
        "method,task,n,precision,recall,f1,accuracy\nSVM-SHAP,binary,4,90.0,91.0,90.5,92.0\n",
    )
    .unwrap();
    let config = dir.join("run.toml");
    fs::write(
        &config,
        r#"
dataset = "data.csv"
output_dir = "run"
baselines = "baselines.csv"
latent_dims = [4]

[autoencoder]
max_epochs = 6
patience = 6

[[classifiers]]
kind = "dt"

[[classifiers]]
kind = "knn"
k = 3

[[classifiers]]
kind = "svm"
epochs = 5
"#,
    )
    .unwrap();
    config
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_usage_errors() {
    let help = uavids(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("run-all"));
    assert_eq!(code(&uavids(&["frobnicate"])), 1);
    assert_eq!(code(&uavids(&["train-eval", "--task", "ternary"])), 1);
}

#[test]
fn config_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "latent_dims = [4]\nunknown_key = 3\n").unwrap();
    let out = uavids(&["config", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown_key"), "{}", stderr(&out));

    let config = small_run(dir.path(), 300);
    let c = config.to_str().unwrap();
    assert_eq!(code(&uavids(&["preprocess", "--config", c])), 0);
    let out = uavids(&["train-ae", "--config", c, "--n", "60"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("N=60"), "{}", stderr(&out));
}

#[test]
fn config_prints_effective_toml() {
    let out = uavids(&["config", "--seed", "9"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 9"), "{text}");
    assert!(text.contains("latent_dims = [4, 8]"), "{text}");
}

#[test]
fn missing_label_column_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = small_run(dir.path(), 200);
    let text = fs::read_to_string(&config).unwrap();
    fs::write(&config, format!("label_column = \"Class\"\n{text}")).unwrap();
    let out = uavids(&["preprocess", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("Class"), "{}", stderr(&out));
}

#[test]
fn later_stage_without_inputs_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = small_run(dir.path(), 200);
    let out = uavids(&["extract", "--config", config.to_str().unwrap(), "--n", "4"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn malformed_baselines_exit_2_with_line() {
    let dir = TempDir::new().unwrap();
    let config = small_run(dir.path(), 400);
    fs::write(
        dir.path().join("baselines.csv"),
        "method,task,n,precision,recall,f1,accuracy\nA,binary,4,90,90,90,90\nB,binary,4,high,90,90,90\n",
    )
    .unwrap();
    let out = uavids(&["run-all", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn run_all_writes_artifacts_and_caches() {
    let dir = TempDir::new().unwrap();
    let config = small_run(dir.path(), 600);
    let c = config.to_str().unwrap();
    let run = dir.path().join("run");

    let first = uavids(&["run-all", "--config", c]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let table = String::from_utf8(first.stdout).unwrap();
    assert!(table.contains("SVM-SHAP"), "{table}");

    let header = fs::read_to_string(run.join("n4/latent_train.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert_eq!(header, "z0,z1,z2,z3,Label");

    let manifest = read_json(&run.join("manifest.json"));
    let stages = manifest["stages"].as_object().unwrap();
    let mut listed = Vec::new();
    for stage in stages.values() {
        for artifact in stage["outputs"].as_array().unwrap() {
            let path = artifact["path"].as_str().unwrap();
            assert!(run.join(path).is_file(), "{path} listed but missing");
            listed.push(path.to_string());
        }
    }
    for expected in [
        "preprocess/params.json",
        "n4/autoencoder.json",
        "n4/loss_curve.csv",
        "n4/binary/dt.json",
        "n4/multiclass/svm.model.json",
        "compare.md",
    ] {
        assert!(listed.iter().any(|p| p == expected), "{expected} not in manifest");
    }

    let curve = fs::read(run.join("n4/loss_curve.csv")).unwrap();
    let manifest_bytes = fs::read(run.join("manifest.json")).unwrap();
    let second = uavids(&["run-all", "--config", c]);
    assert_eq!(code(&second), 0, "{}", stderr(&second));
    let timings = read_json(&run.join("timings.json"));
    for (stage, timing) in timings.as_object().unwrap() {
        assert_eq!(timing["status"], "cached", "{stage} reran");
    }
    assert_eq!(fs::read(run.join("n4/loss_curve.csv")).unwrap(), curve);
    assert_eq!(fs::read(run.join("manifest.json")).unwrap(), manifest_bytes);

    // A fresh directory retrains from scratch and reproduces the curve.
    let other = dir.path().join("again");
    let third = uavids(&["run-all", "--config", c, "--out", other.to_str().unwrap()]);
    assert_eq!(code(&third), 0, "{}", stderr(&third));
    assert_eq!(fs::read(other.join("n4/loss_curve.csv")).unwrap(), curve);
}

#[test]
fn seed_override_changes_training() {
    let dir = TempDir::new().unwrap();
    let config = small_run(dir.path(), 300);
    let c = config.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, seed) in [(&a, "1"), (&b, "2")] {
        let o = out.to_str().unwrap();
        for verb in [&["preprocess"][..], &["train-ae", "--n", "4"]] {
            let mut args = verb.to_vec();
            args.extend(["--config", c, "--out", o, "--seed", seed]);
            let r = uavids(&args);
            assert_eq!(code(&r), 0, "{}", stderr(&r));
        }
    }
    assert_ne!(
        fs::read(a.join("n4/loss_curve.csv")).unwrap(),
        fs::read(b.join("n4/loss_curve.csv")).unwrap()
    );
}
