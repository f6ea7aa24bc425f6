//! End-to-end tests of the `graphfl` binary: exit codes, file outputs, and
//! determinism at the process boundary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphfl"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("graphfl-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const CL_CONFIG: &str = r#"
algorithm = "cl"
seeds = [0]

[dataset.synthetic]
blocks = 3
nodes_per_block = 30
p_in = 0.3
p_out = 0.01
feature_noise = 0.1
seed = 5

[model]
kind = "sgc"

[partition]
regime = "non_iid"
num_clients = 3
labels_per_class = 6
test_per_class = 10

[train]
alpha = 0.2
episodes = 5
local_epochs = 10
"#;

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let dir = tmp("run");
    let cfg = write_config(&dir, CL_CONFIG);
    for out_name in ["a", "b"] {
        let out = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.join(out_name))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    let a = std::fs::read(dir.join("a/seed0/metrics.jsonl")).unwrap();
    let b = std::fs::read(dir.join("b/seed0/metrics.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "two runs of the same config must be byte-identical");
    assert!(dir.join("a/summary.json").is_file());
    assert!(dir.join("a/seed0/checkpoint.params").is_file());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_exit_2() {
    let dir = tmp("cfg-err");
    // Unknown key.
    let bad = write_config(&dir, &format!("{CL_CONFIG}\nnot_a_field = 1\n"));
    let out = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));

    // Invalid value caught by validation, error names the field path.
    let bad = write_config(&dir, &CL_CONFIG.replace("alpha = 0.2", "alpha = -1.0"));
    let out = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("train.alpha"), "{}", stderr_of(&out));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn missing_files_exit_3() {
    let dir = tmp("io-err");
    let out = bin()
        .args(["run", "--config"])
        .arg(dir.join("nope.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn divergence_exits_4() {
    let dir = tmp("diverge");
    let cfg = write_config(&dir, &CL_CONFIG.replace("alpha = 0.2", "alpha = 1e100"));
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("divergence"), "{}", stderr_of(&out));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn gen_synth_convert_round_trip() {
    let dir = tmp("synth");
    let ds = dir.join("ds");
    let out = bin()
        .args(["gen-synth", "--blocks", "4", "--nodes-per-block", "10", "--seed", "3", "--out"])
        .arg(&ds)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    // labels.csv holds exactly 4 classes.
    let labels = std::fs::read_to_string(ds.join("labels.csv")).unwrap();
    let mut classes: Vec<&str> = labels
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    classes.sort_unstable();
    classes.dedup();
    assert_eq!(classes, ["0", "1", "2", "3"]);

    // Converting the canonical form re-emits it unchanged.
    let ds2 = dir.join("ds2");
    let out = bin()
        .args(["convert", "--input"])
        .arg(&ds)
        .arg("--out")
        .arg(&ds2)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    for name in ["manifest.json", "edges.csv", "features.csv", "labels.csv"] {
        let a = std::fs::read(ds.join(name)).unwrap();
        let b = std::fs::read(ds2.join(name)).unwrap();
        assert_eq!(a, b, "{name} changed under convert");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn convert_malformed_csv_names_line_and_exits_3() {
    let dir = tmp("convert-bad");
    let ds = dir.join("ds");
    let out = bin()
        .args(["gen-synth", "--blocks", "2", "--nodes-per-block", "5", "--out"])
        .arg(&ds)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    // Corrupt one data line of edges.csv.
    let edges = std::fs::read_to_string(ds.join("edges.csv")).unwrap();
    let mut lines: Vec<&str> = edges.lines().collect();
    assert!(lines.len() >= 2, "need at least one edge");
    lines[1] = "0,notanode";
    std::fs::write(ds.join("edges.csv"), lines.join("\n")).unwrap();

    let out = bin()
        .args(["convert", "--input"])
        .arg(&ds)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    let err = stderr_of(&out);
    assert!(
        err.contains("edges.csv") && err.contains(":2"),
        "error must name file and line: {err}"
    );
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn gen_splits_is_deterministic() {
    let dir = tmp("splits");
    let cfg = write_config(&dir, CL_CONFIG);
    for name in ["s1.json", "s2.json"] {
        let out = bin()
            .args(["gen-splits", "--config"])
            .arg(&cfg)
            .args(["--seed", "7", "--out"])
            .arg(dir.join(name))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    let a = std::fs::read(dir.join("s1.json")).unwrap();
    let b = std::fs::read(dir.join("s2.json")).unwrap();
    assert_eq!(a, b, "same seed must produce identical splits.json");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn single_value_sweep_matches_run() {
    let dir = tmp("sweep");
    let cfg = write_config(&dir, CL_CONFIG);
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("run"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--axis", "rho", "--values", "0.2", "--out"])
        .arg(dir.join("sweep"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    let summary = std::fs::read_to_string(dir.join("run/summary.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&summary).unwrap();
    let mean = summary["mean_accuracy"].as_f64().unwrap();

    let csv = std::fs::read_to_string(dir.join("sweep/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rho,algorithm,mean_accuracy,std_accuracy"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0.2");
    assert_eq!(row[1], "cl");
    assert_eq!(row[2].parse::<f64>().unwrap(), mean, "sweep point must equal plain run");
    assert!(lines.next().is_none(), "single value → single row");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_rejects_unknown_axis_with_usage_error() {
    let dir = tmp("axis");
    let cfg = write_config(&dir, CL_CONFIG);
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--axis", "episodes", "--values", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("labels_per_class"), "{}", stderr_of(&out));
    let _ = std::fs::remove_dir_all(&dir);
}
