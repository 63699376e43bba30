//! Command bodies. Each writes `<stem>.csv` and `<stem>.jsonl` into the
//! output directory, where the stem is `<command>_<confighash>_<seed>`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use scion_core::experiments::{
    coordinate_check, error_decay_probe, lr_transfer_sweep, rate_harness, train, CoordCheckConfig,
    SweepConfig, TrainConfig,
};
use scion_core::models::checkpoint;
use scion_core::norms::contract::{run_contract_suite, ContractConfig};

use crate::config::{config_hash, typed, Command, RateCommand};
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub stem: String,
    pub files: Vec<PathBuf>,
    pub summary: Value,
    /// Set when the command ran but found a contract violation.
    pub violation: Option<String>,
}

pub fn stem(cmd: Command, tree: &Value) -> String {
    let seed = tree.get("seed").and_then(Value::as_u64).unwrap_or(0);
    format!("{}_{}_{}", cmd.name(), config_hash(tree), seed)
}

/// CSV text: `# schema=1`, extra comment lines, the header, then rows.
fn csv_text(comments: &[String], columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::from("# schema=1\n");
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "{}", columns.join(","));
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}

fn write(dir: &Path, name: &str, contents: &[u8], files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

fn summary_line(cmd: Command, tree: &Value, result: Value) -> String {
    let line = json!({
        "command": cmd.name(),
        "config_hash": config_hash(tree),
        "seed": tree.get("seed").cloned().unwrap_or(Value::Null),
        "config": tree,
        "result": result,
    });
    format!("{line}\n")
}

/// Runs a validated config tree.
pub fn run(cmd: Command, tree: &Value, out: &Path) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    let stem = stem(cmd, tree);
    let mut files = Vec::new();
    let mut violation = None;
    let (csv, result) = match cmd {
        Command::LmoCheck => {
            let cfg: ContractConfig = typed(tree)?;
            let rep = run_contract_suite(&cfg)?;
            let rows = rep
                .kinds
                .iter()
                .map(|k| {
                    vec![
                        k.kind.name().to_string(),
                        k.max_boundary_dev.to_string(),
                        k.max_pairing_dev.to_string(),
                        k.max_scale_dev.to_string(),
                        k.violations.to_string(),
                    ]
                })
                .collect::<Vec<_>>();
            let failing: Vec<&str> = rep
                .kinds
                .iter()
                .filter(|k| k.violations > 0)
                .map(|k| k.kind.name())
                .collect();
            if !failing.is_empty() {
                violation = Some(format!("violations for {}", failing.join(", ")));
            }
            let csv = csv_text(
                &[],
                &["kind", "max_boundary_dev", "max_pairing_dev", "max_scale_dev", "violations"],
                &rows,
            );
            let result = json!({
                "passed": rep.passed(),
                "max_pairing_dev": rep.max_pairing_dev(),
                "kinds": rep.kinds,
            });
            (csv, result)
        }
        Command::Train => {
            let cfg: TrainConfig = typed(tree)?;
            let outcome = train(&cfg)?;
            let bytes = checkpoint::to_bytes(&outcome.model)?;
            write(out, &format!("{stem}.ckpt"), &bytes, &mut files)?;
            let last = outcome.diagnostics.last().copied();
            let result = json!({
                "steps": outcome.diagnostics.records.len(),
                "reference": outcome.diagnostics.reference.label(),
                "train_loss": outcome.train_loss,
                "test_loss": outcome.test_loss,
                "test_accuracy": outcome.test_accuracy,
                "all_feasible": outcome.diagnostics.all_feasible(),
                "last": last,
            });
            (outcome.diagnostics.to_csv_string(), result)
        }
        Command::CoordCheck => {
            let cfg: CoordCheckConfig = typed(tree)?;
            let rep = coordinate_check(&cfg)?;
            let rows = rep
                .rows
                .iter()
                .map(|r| vec![r.width.to_string(), r.layer.to_string(), r.rms.to_string()])
                .collect::<Vec<_>>();
            let csv = csv_text(&[format!("gamma={}", rep.gamma)], &["width", "layer", "rms"], &rows);
            let result = json!({
                "max_width_ratio": rep.max_width_ratio(),
                "within_band": rep.within_band(),
                "rows": rep.rows,
            });
            (csv, result)
        }
        Command::Sweep => {
            let cfg: SweepConfig = typed(tree)?;
            let rep = lr_transfer_sweep(&cfg)?;
            let rows = rep
                .rows
                .iter()
                .map(|r| vec![r.width.to_string(), r.gamma.to_string(), r.final_loss.to_string()])
                .collect::<Vec<_>>();
            let csv = csv_text(&[format!("steps={}", cfg.steps())], &["width", "gamma", "final_loss"], &rows);
            let result = json!({
                "best": rep.best,
                "max_log2_gap": rep.max_log2_gap(),
            });
            (csv, result)
        }
        Command::Rate => {
            let cfg: RateCommand = typed(tree)?;
            let rep = rate_harness(&cfg.harness())?;
            let rows = rep
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        p.gamma.to_string(),
                        p.sigma.to_string(),
                        p.metric.to_string(),
                        p.std_err.to_string(),
                        p.final_ratio.to_string(),
                    ]
                })
                .collect::<Vec<_>>();
            let comments = [
                format!("metric={}", rep.metric),
                format!("lipschitz={}", rep.lipschitz),
                format!("sigma={}", rep.sigma),
                format!("radius={}", rep.radius),
            ];
            let csv = csv_text(
                &comments,
                &["n", "gamma", "sigma", "metric", "std_err", "final_ratio"],
                &rows,
            );
            let probe = match cfg.probe() {
                Some(p) => {
                    let pr = error_decay_probe(&p)?;
                    let rows = pr
                        .mean_sq_error
                        .iter()
                        .enumerate()
                        .map(|(i, e)| vec![(i + 1).to_string(), e.to_string()])
                        .collect::<Vec<_>>();
                    let text = csv_text(&["reference=exact".into()], &["k", "mean_sq_error"], &rows);
                    write(out, &format!("{stem}_probe.csv"), text.as_bytes(), &mut files)?;
                    json!({"slope": pr.slope, "overall_mean": pr.overall_mean, "bins": pr.bins})
                }
                None => Value::Null,
            };
            let result = json!({
                "metric": rep.metric,
                "slope": rep.slope,
                "plateau": rep.plateau,
                "points": rep.points,
                "probe": probe,
            });
            (csv, result)
        }
    };
    write(out, &format!("{stem}.csv"), csv.as_bytes(), &mut files)?;
    write(
        out,
        &format!("{stem}.jsonl"),
        summary_line(cmd, tree, result.clone()).as_bytes(),
        &mut files,
    )?;
    Ok(Outcome {
        stem,
        files,
        summary: result,
        violation,
    })
}
