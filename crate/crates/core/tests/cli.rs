use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ris_feel(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-feel"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const TINY: &str = r#"
[experiment]
scenario = "tiny"
seeds = [1]

[system]
devices = 3

[channel]
direct = { model = "rayleigh", variance = 1.0 }

[selection]
strategy = "all"

[optimizer]
mode = "none"

[data]
features = 4
classes = 2
samples_per_device = 10
test_samples = 20

[train]
rounds = 1
batch_size = 5

[sweep]
key = "system.snr_db"
values = [0.0, 10.0]
"#;

#[test]
fn validate_accepts_presets() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["A", "b", "C", "d"] {
        let out = ris_feel(&["validate", "--scenario", id], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("valid"));
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, TINY.replace("devices = 3", "devices = 0")).unwrap();
    let out = ris_feel(&["validate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));

    fs::write(&bad, TINY.replace("[train]", "[train]\nepochs = 3")).unwrap();
    let out = ris_feel(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = ris_feel(&["validate", "--scenario", "Z"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn other_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = ris_feel(&["run", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = ris_feel(&["plot", ".", "--kind", "acc_vs_round"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_sweep_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    fs::write(&config, TINY).unwrap();
    let config = config.to_str().unwrap();

    let out = ris_feel(&["run", "--config", config, "--seed", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = dir.path().join("results/tiny");
    for name in ["seed_1.csv", "seed_2.csv", "summary.csv"] {
        assert!(run_dir.join(name).is_file(), "{name}");
    }

    let out = ris_feel(&["sweep", "--config", config, "--out", "swept"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let swept = dir.path().join("swept");
    assert!(swept.join("sweep.csv").is_file());
    assert!(swept.join("system.snr_db=0.0/seed_1.csv").is_file());
    assert!(swept.join("system.snr_db=10.0/seed_1.csv").is_file());

    let out = ris_feel(&["plot", "swept", "--kind", "acc_vs_round", "--kind", "mse_vs_n", "--out", "figs"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("figs/acc_vs_round.svg").is_file());
    assert!(dir.path().join("figs/mse_vs_n.svg").is_file());
}
