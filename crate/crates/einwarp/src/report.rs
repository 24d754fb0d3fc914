//! Machine-readable reports: a fixed-key-order JSON document per run, CSV
//! for trajectories and scans, and atomic file writes (temp-then-rename).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::curvature::DerivativeMode;
use crate::warp::ResidualReport;

/// Overall verdict of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One equation row of a report.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub label: String,
    pub sup_norm: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// The report document. Field order is the serialized key order.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub library_version: String,
    pub scenario: Value,
    pub engine_mode: DerivativeMode,
    pub tolerance: f64,
    pub results: Vec<ResultRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_fit_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
    pub verdict: Verdict,
    pub wall_time_ms: f64,
}

impl Report {
    pub fn new(scenario: Value, mode: DerivativeMode, tolerance: f64) -> Self {
        Self {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario,
            engine_mode: mode,
            tolerance,
            results: Vec::new(),
            best_fit_lambda: None,
            notes: Vec::new(),
            data: Value::Null,
            verdict: Verdict::Pass,
            wall_time_ms: 0.0,
        }
    }

    /// Appends every equation of a residual report, prefixing its labels.
    pub fn absorb(&mut self, prefix: &str, report: &ResidualReport) {
        for eq in &report.equations {
            self.results.push(ResultRow {
                label: if prefix.is_empty() {
                    eq.label.clone()
                } else {
                    format!("{prefix}: {}", eq.label)
                },
                sup_norm: eq.sup_norm,
                tolerance: eq.tolerance,
                pass: eq.pass,
            });
        }
        if self.best_fit_lambda.is_none() {
            self.best_fit_lambda = report.best_fit_lambda;
        }
    }

    pub fn push_row(&mut self, label: impl Into<String>, sup_norm: f64, tolerance: f64) {
        self.results.push(ResultRow {
            label: label.into(),
            sup_norm,
            tolerance,
            pass: sup_norm <= tolerance,
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Recomputes the verdict from the rows: pass iff every sup-norm is
    /// within its tolerance.
    pub fn finalize(&mut self, wall_time_ms: f64) {
        self.verdict = if self.results.iter().all(|r| r.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self.wall_time_ms = wall_time_ms;
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Writes bytes to `path` atomically: a temporary sibling file is written,
/// flushed, and renamed over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name()
                .map(|n| n.to_string_lossy())
                .unwrap_or_default()
        )),
        None => Path::new(&format!(
            ".{}.tmp",
            path.file_name()
                .map(|n| n.to_string_lossy())
                .unwrap_or_default()
        ))
        .to_path_buf(),
    };
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}
