//! Conversion of internal collapse times to SI.

use cqhj_core::diagnostics::within_bracket;
use cqhj_core::UnitSystem;
use serde::Serialize;

use crate::{CliError, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conversion {
    pub schema_version: u32,
    pub tau_internal: f64,
    pub mass_kg: f64,
    pub length_m: f64,
    /// Seconds per internal time unit, `m L² / ħ`.
    pub time_scale_s: f64,
    pub tau_si: f64,
    pub within_bracket: bool,
}

pub fn convert(tau: f64, mass_kg: f64, length_m: f64) -> Result<Conversion, CliError> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(CliError::Runtime(format!(
            "tau must be finite and non-negative, got {tau}"
        )));
    }
    let units = UnitSystem::new(mass_kg, length_m).map_err(|e| CliError::Runtime(e.to_string()))?;
    let tau_si = units.to_si(tau);
    Ok(Conversion {
        schema_version: SCHEMA_VERSION,
        tau_internal: tau,
        mass_kg,
        length_m,
        time_scale_s: units.time_scale(),
        tau_si,
        within_bracket: within_bracket(tau_si),
    })
}
