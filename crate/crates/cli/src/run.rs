//! Scenario execution and run artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cqhj_core::diagnostics::collapse_time_from_series;
use cqhj_core::propagate::restrict_to_support;
use cqhj_core::{
    collapsible_evolve, cqhj_evolve, dimensionless_measure, psi_to_p, CollapseReport, CollapseTime, Error, EvolveError,
    ForceTag, IntegratorSpec, Method, ObservableRow, Snapshot, Trajectory, WaveFunction, C64,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ForceSection, InitialSection, ParsedScenario};
use crate::setup::{build, Setup};
use crate::{CliError, SCHEMA_VERSION};

pub const TIMESERIES_COLUMNS: [&str; 8] = [
    "t",
    "norm",
    "energy",
    "fidelity_target",
    "H_mean_re",
    "H_std",
    "gauge_log_magnitude",
    "gauge_phase",
];

const NORM_TOLERANCE: f64 = 1e-9;
const ENERGY_STEP_TOLERANCE: f64 = 1e-8;
const STATIONARY_DRIFT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Margin {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            tolerance,
            pass: measured <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: String,
    pub status: Status,
    pub error: Option<String>,
    pub method: Method,
    pub force: ForceTag,
    pub duration: f64,
    pub t_reached: f64,
    pub snapshots: usize,
    pub target_level: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_norm: f64,
    pub final_fidelity: Option<f64>,
    /// Largest pointwise change of the normalized density from `t = 0`.
    pub max_density_drift: f64,
    pub max_norm_deviation: f64,
    /// Largest energy increase between consecutive snapshots.
    pub max_energy_increase: f64,
    pub collapse: CollapseTime,
    pub tau_internal: Option<f64>,
    pub report: Option<CollapseReport>,
    pub invariant_margins: Vec<Margin>,
}

/// Everything a run produces in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub rows: Vec<ObservableRow>,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn final_state(&self) -> Option<WaveFunction> {
        self.trajectory.final_state().and_then(Result::ok)
    }

    pub fn is_complete(&self) -> bool {
        self.summary.status == Status::Complete
    }
}

/// Builds and runs a scenario. Solver failures still yield an outcome,
/// flagged incomplete.
pub fn execute(parsed: &ParsedScenario) -> Result<RunOutcome, CliError> {
    let setup = build(parsed)?;
    let (trajectory, error) = evolve(parsed, &setup)?;
    let scheme = parsed.scenario.scheme();
    let rows = trajectory
        .observables(&setup.potential, Some(&setup.target), scheme)
        .map_err(|e| CliError::Runtime(format!("observables: {e}")))?;
    let summary = summarize(parsed, &setup, &trajectory, &rows, error)?;
    Ok(RunOutcome {
        trajectory,
        rows,
        summary,
    })
}

/// Rejections before the first step are configuration problems; failures
/// mid-run keep the partial trajectory.
fn evolve(parsed: &ParsedScenario, setup: &Setup) -> Result<(Trajectory, Option<String>), CliError> {
    let result = if setup.spec.method == Method::RungeKutta4 {
        evolve_momentum(setup)
    } else {
        collapsible_evolve(&setup.psi0, &setup.potential, &setup.force, &setup.spec, setup.duration)
    };
    match result {
        Ok(t) => Ok((t, None)),
        Err(EvolveError {
            error,
            partial: Some(p),
        }) => Ok((*p, Some(error.to_string()))),
        Err(EvolveError { error, partial: None }) => {
            let (section, key) = match error {
                Error::NodePresent(_) | Error::AllMasked | Error::NodeApproach { .. } => ("initial", "kind"),
                Error::SchemeMismatch => ("integrator", "scheme"),
                _ => ("integrator", "dt"),
            };
            Err(parsed.source.at(section, key, error.to_string()).into())
        }
    }
}

/// p-space run on the support window of `p0`, embedded back into the full
/// grid as wave functions.
fn evolve_momentum(setup: &Setup) -> Result<Trajectory, EvolveError> {
    let scheme = setup.spec.scheme_for(&setup.grid);
    let p0 = psi_to_p(&setup.psi0, scheme)?;
    let (pw, vw, window) = restrict_to_support(&p0, &setup.potential)?;
    let embed = |t: Trajectory| -> Result<Trajectory, Error> {
        let mut out = Trajectory::default();
        for (k, snap) in t.snapshots.iter().enumerate() {
            let local = snap.wave_function()?;
            let mut values = vec![C64::new(0.0, 0.0); setup.grid.len()];
            values[window.clone()].copy_from_slice(local.values());
            let psi = WaveFunction::from_values(setup.grid.clone(), values)?;
            out.times.push(t.times[k]);
            out.snapshots.push(Snapshot::Psi(psi));
            out.gauge_log.push(t.gauge_log[k]);
        }
        Ok(out)
    };
    // the support window is not periodic, so it takes its own natural scheme
    let spec = IntegratorSpec {
        scheme: None,
        ..setup.spec
    };
    match cqhj_evolve(&pw, &vw, &spec, setup.duration) {
        Ok(t) => Ok(embed(t)?),
        Err(e) => {
            let partial = e.partial.map(|p| embed(*p)).transpose()?.unwrap_or_default();
            Err(EvolveError::interrupted(e.error, partial))
        }
    }
}

fn densities(psi: &WaveFunction) -> Vec<f64> {
    psi.normalized_density()
        .unwrap_or_else(|_| vec![0.0; psi.values().len()])
}

fn summarize(
    parsed: &ParsedScenario,
    setup: &Setup,
    traj: &Trajectory,
    rows: &[ObservableRow],
    error: Option<String>,
) -> Result<Summary, CliError> {
    let s = &parsed.scenario;
    let runtime = |e: Error| CliError::Runtime(e.to_string());
    let psis = traj.wave_functions().map_err(runtime)?;
    let rho0 = densities(&setup.psi0);
    let max_density_drift = psis
        .iter()
        .map(|p| {
            densities(p)
                .iter()
                .zip(&rho0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let max_norm_deviation = rows.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max);
    let initial_energy = cqhj_core::energy(&setup.psi0, &setup.potential).map_err(runtime)?;
    let max_energy_increase = std::iter::once(initial_energy)
        .chain(rows.iter().map(|r| r.energy))
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);

    // the series starts from the initial state at t = 0
    let mut times = vec![0.0];
    let mut fids = vec![cqhj_core::fidelity(&setup.psi0, &setup.target).map_err(runtime)?];
    for r in rows {
        times.push(r.t);
        fids.push(r.fidelity_target.unwrap_or(f64::NAN));
    }
    let collapse = collapse_time_from_series(&times, &fids, setup.epsilon).map_err(runtime)?;
    let tau = collapse.time();
    let xi = tau.and_then(|t| dimensionless_measure(t, &setup.psi0, &setup.potential).ok());
    let report = tau.map(|t| CollapseReport::new(t, setup.epsilon, xi, &setup.units));

    let mut margins = Vec::new();
    if s.integrator.renormalize || s.force == ForceSection::Null {
        margins.push(Margin::at_most("norm_conservation", max_norm_deviation, NORM_TOLERANCE));
    }
    if let ForceSection::Kostin { .. } = s.force {
        margins.push(Margin::at_most(
            "energy_non_increasing",
            max_energy_increase.max(0.0),
            ENERGY_STEP_TOLERANCE,
        ));
    }
    if let InitialSection::Eigenstate { level } = s.initial {
        let stationary = match s.force {
            ForceSection::Null => true,
            ForceSection::Pinning { target_level, .. } => target_level == level,
            ForceSection::Kostin { .. } => true,
        };
        if stationary {
            margins.push(Margin::at_most(
                "stationary_density",
                max_density_drift,
                STATIONARY_DRIFT_TOLERANCE,
            ));
        }
    }

    let last = rows.last();
    let status = if error.is_none() {
        Status::Complete
    } else {
        Status::Incomplete
    };
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        scenario: s.name().to_string(),
        status,
        error,
        method: s.integrator.method,
        force: setup.force.tag(),
        duration: setup.duration,
        t_reached: traj.last_time().unwrap_or(0.0),
        snapshots: traj.len(),
        target_level: s.target_level(),
        initial_energy,
        final_energy: last.map_or(initial_energy, |r| r.energy),
        final_norm: last.map_or(1.0, |r| r.norm),
        final_fidelity: last.and_then(|r| r.fidelity_target),
        max_density_drift,
        max_norm_deviation,
        max_energy_increase,
        collapse,
        tau_internal: tau,
        report,
        invariant_margins: margins,
    })
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

pub fn timeseries_csv(rows: &[ObservableRow]) -> Vec<u8> {
    let mut out = format!("# schema_version: {SCHEMA_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(TIMESERIES_COLUMNS).expect("write to memory");
        for r in rows {
            w.write_record([
                fmt(r.t),
                fmt(r.norm),
                fmt(r.energy),
                r.fidelity_target.map(fmt).unwrap_or_default(),
                fmt(r.h_mean_re),
                fmt(r.h_std),
                fmt(r.gauge_log_magnitude),
                fmt(r.gauge_phase),
            ])
            .expect("write to memory");
        }
        w.flush().expect("flush to memory");
    }
    out
}

fn snapshot_csv(t: f64, psi: &WaveFunction) -> Vec<u8> {
    let mut out = format!("# schema_version: {SCHEMA_VERSION}\n# t: {}\n", fmt(t)).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["x", "re_psi", "im_psi"]).expect("write to memory");
        for (x, z) in psi.grid().coords().iter().zip(psi.values()) {
            w.write_record([fmt(*x), fmt(z.re), fmt(z.im)])
                .expect("write to memory");
        }
        w.flush().expect("flush to memory");
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    scenario: &'a str,
    status: Status,
    wall_time_seconds: f64,
    deterministic: Attestation,
    scenario_echo: String,
    files: Vec<FileEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct Attestation {
    deterministic: bool,
    random_seed: Option<u64>,
    note: &'static str,
}

fn write_file(dir: &Path, rel: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> io::Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    files.push(FileEntry {
        path: rel.to_string(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    });
    Ok(())
}

/// Writes `timeseries.csv`, `summary.json`, optional snapshot files and
/// `manifest.json` into `dir`.
pub fn write_artifacts(
    dir: &Path,
    parsed: &ParsedScenario,
    outcome: &RunOutcome,
    wall_time_seconds: f64,
    dump_snapshots: bool,
) -> Result<Vec<FileEntry>, CliError> {
    let io_err = |e: io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut files = Vec::new();
    write_file(dir, "timeseries.csv", &timeseries_csv(&outcome.rows), &mut files).map_err(io_err)?;
    let mut summary = serde_json::to_vec_pretty(&outcome.summary).expect("summary serializes");
    summary.push(b'\n');
    write_file(dir, "summary.json", &summary, &mut files).map_err(io_err)?;
    if dump_snapshots {
        let psis = outcome
            .trajectory
            .wave_functions()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        for (k, (t, psi)) in outcome.trajectory.times.iter().zip(&psis).enumerate() {
            let rel = format!("snapshots/psi_{k:05}.csv");
            write_file(dir, &rel, &snapshot_csv(*t, psi), &mut files).map_err(io_err)?;
        }
    }
    let s = &parsed.scenario;
    let random_seed = match s.initial {
        InitialSection::RandomNodeless { seed, .. } => Some(seed),
        _ => None,
    };
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "cqhj",
        tool_version: env!("CARGO_PKG_VERSION"),
        scenario: s.name(),
        status: outcome.summary.status,
        wall_time_seconds,
        deterministic: Attestation {
            deterministic: true,
            random_seed,
            note: "fixed-step integrators, no threading inside a run; identical scenario and version give identical timeseries and summary bytes",
        },
        scenario_echo: s.echo(),
        files: files.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    fs::write(dir.join("manifest.json"), bytes).map_err(io_err)?;
    Ok(files)
}

/// Runs a scenario and writes its artifacts under `root`.
pub fn run_to_dir(parsed: &ParsedScenario, dir: &Path, dump_snapshots: bool) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let outcome = execute(parsed)?;
    let wall = start.elapsed().as_secs_f64();
    write_artifacts(dir, parsed, &outcome, wall, dump_snapshots)?;
    Ok(outcome)
}

/// Output root: `CQHJ_OUTPUT_ROOT` when set, else the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(crate::OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}
