//! Per-step run records and their CSV form.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_SCHEMA: u32 = 1;

pub const CSV_COLUMNS: [&str; 9] = [
    "step",
    "gamma",
    "alpha",
    "loss",
    "dual_grad_norm",
    "fw_gap",
    "composite_norm",
    "error_proxy",
    "feasible",
];

/// Tolerance used for the `feasible` column.
pub const FEASIBLE_TOL: f64 = 1e-8;

/// Quantities at the iterate `x^k` entering step `k`.
///
/// `dual_grad_norm` and `fw_gap` use the reference gradient (exact when the
/// problem has one). `error_proxy` is `‖d^k - ĝ(x^k)‖₂` for the optimizer's
/// running gradient estimate `d^k` after it has absorbed step `k`'s sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub loss: f64,
    pub dual_grad_norm: f64,
    pub fw_gap: f64,
    pub composite_norm: f64,
    pub error_proxy: f64,
    pub feasible: bool,
}

/// How the reference gradient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Exact,
    /// A fresh batch this many times larger than the training batch.
    BatchProxy(usize),
    /// Reference quantities and norms were not computed; those columns hold NaN.
    Skipped,
}

impl Reference {
    pub fn label(self) -> String {
        match self {
            Reference::Exact => "exact".into(),
            Reference::BatchProxy(f) => format!("proxy_batch_x{f}"),
            Reference::Skipped => "skipped".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDiagnostics {
    pub reference: Reference,
    pub records: Vec<StepRecord>,
}

impl RunDiagnostics {
    pub fn new(reference: Reference) -> Self {
        Self {
            reference,
            records: Vec::new(),
        }
    }

    /// Appends a record; steps must arrive as `1, 2, 3, ...`.
    pub fn push(&mut self, rec: StepRecord) -> Result<()> {
        let expected = self.records.len() + 1;
        if rec.step != expected {
            return Err(Error::Format(format!(
                "diagnostics expected step {expected}, got {}",
                rec.step
            )));
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn is_dense(&self) -> bool {
        self.records.iter().enumerate().all(|(i, r)| r.step == i + 1)
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn all_feasible(&self) -> bool {
        self.records.iter().all(|r| r.feasible)
    }

    /// Header comments, a column line, then one row per step. Floats use
    /// the shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(w, "# schema={CSV_SCHEMA}").map_err(io)?;
        writeln!(w, "# reference={}", self.reference.label()).map_err(io)?;
        writeln!(w, "{}", CSV_COLUMNS.join(",")).map_err(io)?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.step,
                r.gamma,
                r.alpha,
                r.loss,
                r.dual_grad_norm,
                r.fw_gap,
                r.composite_norm,
                r.error_proxy,
                r.feasible
            )
            .map_err(io)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: usize) -> StepRecord {
        StepRecord {
            step,
            gamma: 0.1,
            alpha: 1.0,
            loss: 0.5,
            dual_grad_norm: 2.0,
            fw_gap: 0.25,
            composite_norm: 1.0,
            error_proxy: 0.0,
            feasible: true,
        }
    }

    #[test]
    fn steps_must_be_dense() {
        let mut d = RunDiagnostics::new(Reference::Exact);
        d.push(rec(1)).unwrap();
        assert!(d.push(rec(3)).is_err());
        d.push(rec(2)).unwrap();
        assert!(d.is_dense());
    }

    #[test]
    fn csv_layout() {
        let mut d = RunDiagnostics::new(Reference::BatchProxy(16));
        d.push(rec(1)).unwrap();
        let csv = d.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert_eq!(lines[1], "# reference=proxy_batch_x16");
        assert_eq!(lines[2].split(',').count(), CSV_COLUMNS.len());
        assert_eq!(lines[3], "1,0.1,1,0.5,2,0.25,1,0,true");
    }
}
