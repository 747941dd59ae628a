//! One-parameter sweeps over a scenario.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{with_override, ParsedScenario};
use crate::run::{run_to_dir, sha256_hex};
use crate::{CliError, SCHEMA_VERSION};

pub const SWEEP_COLUMNS: [&str; 8] = [
    "value",
    "status",
    "tau_internal",
    "tau_si",
    "xi",
    "final_fidelity",
    "run_dir",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub status: &'static str,
    pub tau_internal: Option<f64>,
    pub tau_si: Option<f64>,
    pub xi: Option<f64>,
    pub final_fidelity: Option<f64>,
    pub run_dir: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub dir: PathBuf,
    pub rows: Vec<SweepRow>,
    pub table_sha256: String,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "complete").count()
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad value {s:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("no values given".into());
    }
    Ok(values)
}

fn run_row(base: &ParsedScenario, param: &str, value: f64, dir: &Path) -> SweepRow {
    let mut row = SweepRow {
        value,
        status: "failed",
        tau_internal: None,
        tau_si: None,
        xi: None,
        final_fidelity: None,
        run_dir: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        error: None,
    };
    let parsed = match with_override(base, param, value) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    match run_to_dir(&parsed, dir, false) {
        Ok(outcome) => {
            let s = &outcome.summary;
            row.status = if outcome.is_complete() {
                "complete"
            } else {
                "incomplete"
            };
            row.error = s.error.clone();
            row.tau_internal = s.tau_internal;
            row.tau_si = s.report.as_ref().map(|r| r.tau_si);
            row.xi = s.report.as_ref().and_then(|r| r.xi);
            row.final_fidelity = s.final_fidelity;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut out = format!("# schema_version: {SCHEMA_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(SWEEP_COLUMNS).expect("write to memory");
        for r in rows {
            w.write_record([
                format!("{:e}", r.value),
                r.status.to_string(),
                opt(r.tau_internal),
                opt(r.tau_si),
                opt(r.xi),
                opt(r.final_fidelity),
                r.run_dir.clone(),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("write to memory");
        }
        w.flush().expect("flush to memory");
    }
    out
}

/// Runs `base` once per value of `param`, in parallel, writing each run
/// under `<output>/sweep_<param>/row_<i>` and the table to `sweep.csv`.
/// Rows keep the order of `values`; a failing row is recorded, not fatal.
pub fn sweep(base: &ParsedScenario, param: &str, values: &[f64], root: &Path) -> Result<SweepResult, CliError> {
    // reject unknown parameters before launching anything
    with_override(base, param, values[0])?;
    let dir = base.scenario.output_dir(root).join(format!("sweep_{param}"));
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| run_row(base, param, v, &dir.join(format!("row_{i}"))))
        .collect();
    let table = sweep_csv(&rows);
    let path = dir.join("sweep.csv");
    fs::write(&path, &table).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(SweepResult {
        dir,
        rows,
        table_sha256: sha256_hex(&table),
    })
}
