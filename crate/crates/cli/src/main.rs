use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cqhj_cli::config::load;
use cqhj_cli::run::{output_root, run_to_dir};
use cqhj_cli::sweep::{parse_values, sweep};
use cqhj_cli::units::convert;
use cqhj_cli::verify::{run_suite, Level};
use cqhj_cli::{CliError, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_VERIFY_FAILED};

#[derive(Parser)]
#[command(
    name = "cqhj",
    version,
    about = "Complex quantum Hamilton-Jacobi dynamics with collapse forces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        /// Also write one CSV per snapshot (x, Re psi, Im psi).
        #[arg(long)]
        dump_snapshots: bool,
    },
    /// Run the built-in invariant suite.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        /// Multiplies every upper-bound tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Run a scenario once per value of a numeric parameter.
    Sweep {
        config: PathBuf,
        /// Dotted scenario key, e.g. force.kappa.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
    },
    /// Convert an internal collapse time to seconds.
    ConvertUnits {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        mass_kg: f64,
        #[arg(long)]
        length_m: f64,
    },
}

fn fail(e: &CliError) -> i32 {
    eprintln!("{e}");
    e.exit_code()
}

fn run(config: &Path, dump: bool) -> i32 {
    let parsed = match load(config) {
        Ok(p) => p,
        Err(e) => return fail(&e.into()),
    };
    let dir = parsed.scenario.output_dir(&output_root());
    let dump = dump || parsed.scenario.output.dump_snapshots;
    match run_to_dir(&parsed, &dir, dump) {
        Ok(outcome) => {
            let s = &outcome.summary;
            println!("wrote {}", dir.display());
            match s.tau_internal {
                Some(t) => println!("collapse time {t:.6e} (internal units)"),
                None => println!("collapse not reached"),
            }
            if outcome.is_complete() {
                EXIT_OK
            } else {
                eprintln!("run incomplete: {}", s.error.as_deref().unwrap_or("unknown error"));
                EXIT_RUNTIME
            }
        }
        Err(e) => fail(&e),
    }
}

fn verify(level: LevelArg, scale: f64) -> i32 {
    if !(scale.is_finite() && scale > 0.0) {
        eprintln!("--tolerance-scale must be positive and finite, got {scale}");
        return EXIT_CONFIG;
    }
    let level = match level {
        LevelArg::Fast => Level::Fast,
        LevelArg::Full => Level::Full,
    };
    let report = run_suite(level, scale);
    for c in &report.checks {
        println!("{}", c.line(scale));
    }
    let failures = report.failures();
    println!(
        "{} of {} invariants passed in {:.1} s",
        report.checks.len() - failures.len(),
        report.checks.len(),
        report.seconds
    );
    if failures.is_empty() {
        EXIT_OK
    } else {
        let names: Vec<&str> = failures.iter().map(|c| c.name.as_str()).collect();
        eprintln!("failed: {}", names.join(", "));
        EXIT_VERIFY_FAILED
    }
}

fn run_sweep(config: &Path, param: &str, values: &str) -> i32 {
    let values = match parse_values(values) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("--values: {e}");
            return EXIT_CONFIG;
        }
    };
    let parsed = match load(config) {
        Ok(p) => p,
        Err(e) => return fail(&e.into()),
    };
    match sweep(&parsed, param, &values, &output_root()) {
        Ok(result) => {
            println!("wrote {}", result.dir.join("sweep.csv").display());
            for r in &result.rows {
                let tau = r.tau_internal.map_or("-".to_string(), |t| format!("{t:.6e}"));
                println!("{:e}\t{}\t{tau}", r.value, r.status);
            }
            if result.failures() == 0 {
                EXIT_OK
            } else {
                eprintln!("{} of {} rows did not complete", result.failures(), result.rows.len());
                EXIT_RUNTIME
            }
        }
        Err(e) => fail(&e),
    }
}

fn convert_units(tau: f64, mass_kg: f64, length_m: f64) -> i32 {
    match convert(tau, mass_kg, length_m) {
        Ok(c) => {
            println!("{}", serde_json::to_string_pretty(&c).expect("conversion serializes"));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run { config, dump_snapshots } => run(config, *dump_snapshots),
        Command::Verify { level, tolerance_scale } => verify(*level, *tolerance_scale),
        Command::Sweep { config, param, values } => run_sweep(config, param, values),
        Command::ConvertUnits { tau, mass_kg, length_m } => convert_units(*tau, *mass_kg, *length_m),
    };
    ExitCode::from(code as u8)
}
