use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use scion_cli::config::{apply_set, leaf_paths};
use scion_cli::{cli_command, resolve, Command};
use scion_core::experiments::{train, TrainConfig};
use scion_core::models::checkpoint;

fn scion(out: &Path, args: &[&str]) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_scion"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn scion")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_with(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

const SMALL_TRAIN: [&str; 4] = [
    "--set",
    "optimizer.schedule.horizon=20",
    "--set",
    "model.hidden=[16]",
];

#[test]
fn lmo_check_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = scion(dir.path(), &["lmo-check", "--set", "samples=10", "--set", "max_dim=12"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = files_with(dir.path(), ".csv");
    assert_eq!(csv.len(), 1);
    let name = csv[0].file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("lmo-check_") && name.ends_with("_0.csv"), "{name}");
    let text = std::fs::read_to_string(&csv[0]).unwrap();
    assert!(text.starts_with("# schema=1\n"));
    assert_eq!(files_with(dir.path(), ".jsonl").len(), 1);
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = scion(dir.path(), &["train", "--set", "optimizer.bogus_key=1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bogus_key"), "{}", stderr(&o));
    assert!(files_with(dir.path(), ".csv").is_empty());

    let o = scion(dir.path(), &["rate", "--set", "trials=0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unreadable_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let o = scion(dir.path(), &["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn degenerate_newton_schulz_is_a_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = scion(
        dir.path(),
        &[
            "lmo-check",
            "--set",
            "samples=10",
            "--set",
            r#"backend={"backend":"newton_schulz","iters":0}"#,
        ],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("spectral"));
    // Outputs are still written so the failure can be inspected.
    assert_eq!(files_with(dir.path(), ".csv").len(), 1);
}

#[test]
fn divergence_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = scion(
        dir.path(),
        &[
            "train",
            "--set",
            "optimizer.algo=sgd",
            "--set",
            "optimizer.schedule.gamma0=1",
            "--set",
            "model.activation=scaled_relu2",
            "--set",
            "model.init=kaiming",
            "--set",
            "model.hidden=[256,256,256,256]",
            "--set",
            "record_reference=false",
        ],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical failure"));
}

#[test]
fn train_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--seed", "7"];
    args.extend(SMALL_TRAIN);
    assert_eq!(code(&scion(a.path(), &args)), 0);
    assert_eq!(code(&scion(b.path(), &args)), 0);
    let ca = files_with(a.path(), ".csv");
    let cb = files_with(b.path(), ".csv");
    assert_eq!(ca.len(), 1);
    assert_eq!(ca[0].file_name(), cb[0].file_name());
    assert!(ca[0].to_string_lossy().ends_with("_7.csv"));
    assert_eq!(std::fs::read(&ca[0]).unwrap(), std::fs::read(&cb[0]).unwrap());
    let ka = files_with(a.path(), ".ckpt");
    assert_eq!(std::fs::read(&ka[0]).unwrap(), std::fs::read(&files_with(b.path(), ".ckpt")[0]).unwrap());

    let csv = std::fs::read_to_string(&ca[0]).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(lines[1], "# reference=proxy_batch_x16");
    assert_eq!(lines.len(), 3 + 20);
}

#[test]
fn zero_step_size_leaves_parameters_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--set", "optimizer.schedule.gamma0=0"];
    args.extend(SMALL_TRAIN);
    assert_eq!(code(&scion(dir.path(), &args)), 0);
    let saved = checkpoint::load(&files_with(dir.path(), ".ckpt")[0]).unwrap();

    let sets: Vec<String> = args[1..].iter().filter(|a| **a != "--set").map(|s| s.to_string()).collect();
    let tree = resolve(Command::Train, None, None, &sets).unwrap();
    let cfg: TrainConfig = serde_json::from_value(tree).unwrap();
    let out = train(&cfg).unwrap();
    assert_eq!(saved.params(), out.initial.params());
}

#[test]
fn constrained_runs_stay_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--set", "optimizer.algo=scg", "--set", "optimizer.schedule.gamma0=0.5"];
    args.extend(SMALL_TRAIN);
    assert_eq!(code(&scion(dir.path(), &args)), 0);
    let csv = std::fs::read_to_string(&files_with(dir.path(), ".csv")[0]).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "feasible").unwrap();
    let mut rows = 0;
    for l in lines {
        assert_eq!(l.split(',').nth(col), Some("true"), "{l}");
        rows += 1;
    }
    assert_eq!(rows, 20);
}

#[test]
fn rate_writes_probe_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = scion(
        dir.path(),
        &["rate", "--set", "n_list=[50,200]", "--set", "trials=2", "--set", "probe_horizon=64", "--set", "probe_trials=2"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(files_with(dir.path(), "_probe.csv").len(), 1);
    let main: Vec<PathBuf> = files_with(dir.path(), ".csv")
        .into_iter()
        .filter(|p| !p.to_string_lossy().ends_with("_probe.csv"))
        .collect();
    let text = std::fs::read_to_string(&main[0]).unwrap();
    assert!(text.starts_with("# schema=1\n"));
    assert!(text.contains("# metric=dual_grad_norm"));
    assert!(text.contains("# lipschitz=1"));
}

#[test]
fn config_file_and_seed_flag_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("coord.json");
    std::fs::write(&cfg, r#"{"widths": [16, 32], "depth": 2, "samples": 2, "input_dim": 8}"#).unwrap();
    let o = scion(dir.path(), &["coord-check", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = files_with(dir.path(), ".csv");
    assert!(csv[0].to_string_lossy().ends_with("_3.csv"));
    let text = std::fs::read_to_string(&csv[0]).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 2);
}

fn documented(cmd: Command) -> BTreeSet<String> {
    cmd.keys().iter().map(|k| k.key.to_string()).collect()
}

fn observed(cmd: Command) -> BTreeSet<String> {
    let mut all: BTreeSet<String> = leaf_paths(&cmd.defaults()).into_iter().collect();
    for v in cmd.variants() {
        let mut tree = cmd.defaults();
        for s in v.sets {
            apply_set(&mut tree, s).unwrap();
        }
        let canonical = cmd.validate(&tree).unwrap_or_else(|e| panic!("{}: {e}", v.name));
        all.extend(leaf_paths(&canonical));
    }
    all
}

#[test]
fn documented_keys_match_config_trees() {
    for cmd in Command::ALL {
        assert_eq!(documented(cmd), observed(cmd), "{}", cmd.name());
    }
}

#[test]
fn help_lists_every_key() {
    for cmd in Command::ALL {
        let mut c = cli_command();
        let sub = c.find_subcommand_mut(cmd.name()).unwrap();
        let help = sub.render_long_help().to_string();
        for k in cmd.keys() {
            assert!(help.contains(k.key), "{} help misses {}", cmd.name(), k.key);
        }
    }
}

#[test]
fn dry_run_prints_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = scion(dir.path(), &["sweep", "--dry-run", "--set", "epochs=1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["epochs"], 1);
    assert!(files_with(dir.path(), ".csv").is_empty());
}
