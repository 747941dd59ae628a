//! Scenario files: sectioned TOML, validated into a fully resolved
//! [`Scenario`] whose echo lists every default that was applied.

use std::fmt;
use std::path::{Path, PathBuf};

use cqhj_core::{Boundary, DerivativeScheme, Method};
use serde::{Deserialize, Serialize};

/// A configuration problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.origin, line, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub boundary: BoundaryName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    Periodic,
    Box,
}

impl From<BoundaryName> for Boundary {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Box => Boundary::Box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    Free,
    Harmonic {
        omega: f64,
    },
    /// Infinite well between the grid walls.
    Box,
    /// `a (x² − b²)²`.
    DoubleWell {
        a: f64,
        b: f64,
    },
}

fn zero() -> f64 {
    0.0
}

fn default_modes() -> usize {
    cqhj_core::NodelessSpec::default().modes
}

fn default_amplitude() -> f64 {
    cqhj_core::NodelessSpec::default().amplitude
}

/// Initial states; eigenstate levels index the solved basis of the
/// scenario potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Packet {
        x0: f64,
        #[serde(default = "zero")]
        k0: f64,
        sigma: f64,
    },
    Eigenstate {
        level: usize,
    },
    Superposition {
        levels: Vec<usize>,
        /// `[re, im]` per level.
        coefficients: Vec<[f64; 2]>,
    },
    RandomNodeless {
        seed: u64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceSection {
    #[default]
    Null,
    Pinning {
        kappa: f64,
        #[serde(default)]
        target_level: usize,
    },
    Kostin {
        gamma: f64,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Method,
    pub dt: f64,
    #[serde(default = "yes")]
    pub renormalize: bool,
    /// Resolved to the grid's natural scheme when absent.
    pub scheme: Option<DerivativeScheme>,
}

fn one() -> usize {
    1
}

fn default_epsilon() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub duration: f64,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Level of the fidelity target; resolved to the pinning target, or the
    /// ground state, when absent.
    pub target_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    pub mass_kg: f64,
    pub length_m: f64,
}

impl Default for UnitsSection {
    fn default() -> Self {
        let u = cqhj_core::UnitSystem::electron_nanometer();
        Self {
            mass_kg: u.mass_kg,
            length_m: u.length_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths resolve against the output root.
    pub dir: Option<String>,
    #[serde(default)]
    pub dump_snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Option<String>,
    pub grid: GridSection,
    pub potential: PotentialSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub force: ForceSection,
    pub integrator: IntegratorSection,
    pub run: RunSection,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Source text kept for line-anchored errors.
#[derive(Debug, Clone)]
pub struct Source {
    pub origin: String,
    pub text: String,
}

impl Source {
    pub fn error(&self, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.origin.clone(),
            line,
            message: message.into(),
        }
    }

    fn line_of_offset(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    /// Line of `key` inside `[section]`, else of the section header.
    pub fn locate(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        let mut header = None;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('[') {
                current = rest.trim_end_matches(']').trim().to_string();
                if current == section {
                    header = Some(i + 1);
                }
                continue;
            }
            if current == section {
                let name = line.split('=').next().unwrap_or("").trim();
                if !key.is_empty() && name == key {
                    return Some(i + 1);
                }
            }
        }
        header
    }

    /// Anchored error for `section.key`.
    pub fn at(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let message = message.into();
        let full = if key.is_empty() {
            format!("[{section}] {message}")
        } else {
            format!("{section}.{key}: {message}")
        };
        self.error(self.locate(section, key), full)
    }
}

/// A parsed, validated scenario with its source.
#[derive(Debug, Clone)]
pub struct ParsedScenario {
    pub scenario: Scenario,
    pub source: Source,
}

pub fn load(path: &Path) -> Result<ParsedScenario, ConfigError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        origin: origin.clone(),
        line: None,
        message: format!("cannot read: {e}"),
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse(&text, &origin, stem)
}

/// Parses and validates; `default_name` is used when the file sets none.
pub fn parse(text: &str, origin: &str, default_name: &str) -> Result<ParsedScenario, ConfigError> {
    let source = Source {
        origin: origin.to_string(),
        text: text.to_string(),
    };
    let scenario: Scenario = toml::from_str(text).map_err(|e| toml_error(&source, &e))?;
    finish(scenario, source, default_name)
}

/// Replaces `path` (dotted, e.g. `force.kappa`) by `value` and re-validates.
pub fn with_override(parsed: &ParsedScenario, path: &str, value: f64) -> Result<ParsedScenario, ConfigError> {
    let source = &parsed.source;
    let mut table = toml::Table::try_from(&parsed.scenario)
        .map_err(|e| source.error(None, format!("cannot re-encode scenario: {e}")))?;
    let parts: Vec<&str> = path.split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut cursor = &mut table;
    for s in sections {
        cursor = cursor
            .get_mut(*s)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| source.error(None, format!("parameter {path}: no section [{s}]")))?;
    }
    let slot = cursor
        .get_mut(*last)
        .ok_or_else(|| source.error(None, format!("parameter {path} is not set in the scenario")))?;
    *slot = match slot {
        toml::Value::Float(_) => toml::Value::Float(value),
        toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9e15 => toml::Value::Integer(value as i64),
        toml::Value::Integer(_) => {
            return Err(source.error(None, format!("parameter {path} needs integer values, got {value}")))
        }
        _ => return Err(source.error(None, format!("parameter {path} is not numeric"))),
    };
    let scenario: Scenario = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| source.error(None, format!("{path} = {value}: {}", e.message().trim())))?;
    let name = parsed.scenario.name().to_string();
    finish(scenario, source.clone(), &name)
}

fn toml_error(source: &Source, e: &toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| source.line_of_offset(s.start));
    source.error(line, e.message().trim().to_string())
}

fn finish(mut scenario: Scenario, source: Source, default_name: &str) -> Result<ParsedScenario, ConfigError> {
    resolve(&mut scenario, default_name);
    validate(&scenario, &source)?;
    Ok(ParsedScenario { scenario, source })
}

fn resolve(s: &mut Scenario, default_name: &str) {
    if s.name.is_none() {
        s.name = Some(default_name.to_string());
    }
    if s.integrator.scheme.is_none() {
        s.integrator.scheme = Some(DerivativeScheme::natural_for(s.grid.boundary.into()));
    }
    if s.run.target_level.is_none() {
        s.run.target_level = Some(match s.force {
            ForceSection::Pinning { target_level, .. } => target_level,
            _ => 0,
        });
    }
    if s.output.dir.is_none() {
        s.output.dir = Some(format!("runs/{}", s.name.as_deref().unwrap_or(default_name)));
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn validate(s: &Scenario, src: &Source) -> Result<(), ConfigError> {
    let g = &s.grid;
    if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_max > g.x_min) {
        return Err(src.at(
            "grid",
            "x_max",
            format!("must exceed x_min ({} vs {})", g.x_max, g.x_min),
        ));
    }
    if g.n_points < cqhj_core::grid::MIN_POINTS {
        return Err(src.at(
            "grid",
            "n_points",
            format!("{} below the minimum {}", g.n_points, cqhj_core::grid::MIN_POINTS),
        ));
    }
    match s.potential {
        PotentialSection::Harmonic { omega } if !positive(omega) => {
            return Err(src.at("potential", "omega", format!("must be positive, got {omega}")));
        }
        PotentialSection::DoubleWell { a, b } if !(positive(a) && b.is_finite()) => {
            return Err(src.at(
                "potential",
                "a",
                format!("a must be positive and b finite, got {a}, {b}"),
            ));
        }
        PotentialSection::Box if g.boundary != BoundaryName::Box => {
            return Err(src.at("potential", "kind", "the box potential needs grid.boundary = \"box\""));
        }
        _ => {}
    }
    match &s.initial {
        InitialSection::Superposition { levels, coefficients } => {
            if levels.is_empty() || levels.len() != coefficients.len() {
                return Err(src.at(
                    "initial",
                    "coefficients",
                    format!("{} coefficients for {} levels", coefficients.len(), levels.len()),
                ));
            }
        }
        InitialSection::Packet { sigma, .. } if !positive(*sigma) => {
            return Err(src.at("initial", "sigma", format!("must be positive, got {sigma}")));
        }
        _ => {}
    }
    match s.force {
        ForceSection::Pinning { kappa, .. } if !positive(kappa) => {
            return Err(src.at("force", "kappa", format!("must be positive, got {kappa}")));
        }
        ForceSection::Kostin { gamma } if !positive(gamma) => {
            return Err(src.at("force", "gamma", format!("must be positive, got {gamma}")));
        }
        _ => {}
    }
    let it = &s.integrator;
    if !positive(it.dt) {
        return Err(src.at("integrator", "dt", format!("must be positive, got {}", it.dt)));
    }
    if it.method == Method::SplitStep && g.boundary != BoundaryName::Periodic {
        return Err(src.at("integrator", "method", "split_step needs a periodic grid"));
    }
    if it.method == Method::RungeKutta4 && s.force != ForceSection::Null {
        return Err(src.at(
            "integrator",
            "method",
            "runge_kutta4 evolves p and supports only the null force",
        ));
    }
    if it.scheme == Some(DerivativeScheme::Spectral) && g.boundary != BoundaryName::Periodic {
        return Err(src.at("integrator", "scheme", "spectral differentiation needs a periodic grid"));
    }
    let r = &s.run;
    if !positive(r.duration) {
        return Err(src.at("run", "duration", format!("must be positive, got {}", r.duration)));
    }
    if r.snapshot_stride == 0 {
        return Err(src.at("run", "snapshot_stride", "must be at least 1"));
    }
    if !(r.epsilon > 0.0 && r.epsilon < 0.5) {
        return Err(src.at("run", "epsilon", format!("must lie in (0, 0.5), got {}", r.epsilon)));
    }
    if !(positive(s.units.mass_kg) && positive(s.units.length_m)) {
        return Err(src.at("units", "mass_kg", "unit scales must be positive"));
    }
    Ok(())
}

impl Scenario {
    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.integrator
            .scheme
            .unwrap_or_else(|| DerivativeScheme::natural_for(self.grid.boundary.into()))
    }

    pub fn target_level(&self) -> usize {
        self.run.target_level.unwrap_or(0)
    }

    /// The resolved scenario as TOML, defaults included.
    pub fn echo(&self) -> String {
        let body = toml::to_string(self).expect("scenario serializes");
        format!("# resolved scenario; all quantities in internal units (hbar = m = 1)\n{body}")
    }

    /// Output directory under `root` (relative paths) or as given.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        let dir = PathBuf::from(self.output.dir.as_deref().unwrap_or("runs/scenario"));
        if dir.is_absolute() {
            dir
        } else {
            root.join(dir)
        }
    }
}
