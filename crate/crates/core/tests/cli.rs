//! Contract tests for the `dtdr` binary: exit codes, emitted file sets
//! and byte-level reproducibility of identical runs.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dtdr");

/// Small Mackey-Glass run that trains in well under a second.
const TINY: &str = r#"
[task]
system = "mackey_glass"
delta_n = 1
n_train = 200
n_test = 50
discard = 100
seed = 11

[network]
substeps_per_node = 2
washout_steps = 20

[[network.layers]]
beta = 0.9
tau_fast = 0.01
tau_delay = 4.0
bias = 0.2
n_nodes = 20
input_gain = 1.0
"#;

fn dtdr(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary spawns")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn train_succeeds_and_emits_the_full_file_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let out = dir.path().join("run");
    let result = dtdr(&["train", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    for name in ["states_meta.json", "weights.bin", "report.json", "manifest.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["root_seed"], 11);
    assert!(manifest["output_files"].as_array().unwrap().len() >= 4);
}

#[test]
fn generate_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let mut blobs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let result = dtdr(&[
            "generate",
            "--config",
            &config,
            "--samples",
            "300",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
        blobs.push((
            std::fs::read(out.join("series.csv")).unwrap(),
            std::fs::read(out.join("series.bin")).unwrap(),
        ));
    }
    assert_eq!(blobs[0].0, blobs[1].0, "series.csv differs between reruns");
    assert_eq!(blobs[0].1, blobs[1].1, "series.bin differs between reruns");
}

#[test]
fn seed_override_changes_the_generated_series() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let mut blobs = Vec::new();
    for (sub, seed) in [("a", "11"), ("b", "12")] {
        let out = dir.path().join(sub);
        let result = dtdr(&[
            "generate",
            "--config",
            &config,
            "--samples",
            "300",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
        blobs.push(std::fs::read(out.join("series.bin")).unwrap());
    }
    assert_ne!(blobs[0], blobs[1]);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &TINY.replace("delta_n = 1", "delta_n = 0"));
    let result = dtdr(&["train", "--config", &config]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("delta_n"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &TINY.replace("seed = 11", "seed = 11\nwhat = 3"));
    let result = dtdr(&["train", "--config", &config]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("what"));
}

#[test]
fn unknown_preset_exits_2() {
    let result = dtdr(&["train", "--preset", "nope"]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("nope") && stderr.contains("fig3c"), "{stderr}");
}

#[test]
fn second_layer_input_gain_without_override_exits_2() {
    let extra = r#"
[[network.layers]]
beta = 0.9
tau_fast = 0.01
delta_slow = 0.01
tau_delay = 4.0
n_nodes = 20
input_gain = 1.0
"#;
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("{TINY}\n{extra}"));
    let result = dtdr(&["train", "--config", &config]);
    assert_eq!(result.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&result.stderr).contains("layers.2.input_gain"),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
}

#[test]
fn untrainable_readout_exits_3() {
    // 10 training rows cannot determine 51 readout coefficients at ridge
    // 0: every grid point is singular and training fails as a whole.
    let text = TINY
        .replace("n_train = 200", "n_train = 10")
        .replace("n_nodes = 20", "n_nodes = 50")
        + "\n[train]\nridge_grid = [0.0]\n";
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &text);
    let result = dtdr(&["train", "--config", &config]);
    assert_eq!(
        result.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
}

#[test]
fn missing_config_file_exits_4() {
    let result = dtdr(&["train", "--config", "/no/such/file.toml"]);
    assert_eq!(result.status.code(), Some(4));
}
