//! Observables, collapse-time extraction and SI conversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::potential::Potential;
use crate::propagate::Trajectory;
use crate::wavefunction::WaveFunction;

/// ħ in J·s (exact SI value).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
pub const ELECTRON_MASS_KG: f64 = 9.109_383_701_5e-31;
/// Collapse-time bracket in seconds, 0.1 ps to 0.1 ms.
pub const BRACKET_SECONDS: (f64, f64) = (1e-13, 1e-4);
/// Spreads below this fraction of `max(|E|, 1)` count as zero.
pub const ZERO_SPREAD_TOLERANCE: f64 = 1e-6;
/// Label attached to every reported `xi`.
pub const XI_DEFINITION: &str = "xi = tau * DeltaE / hbar (artifact-defined stand-in)";

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    let ab = a.inner(b)?;
    let na = a.inner(a)?.re;
    let nb = b.inner(b)?.re;
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok((ab.norm_sqr() / (na * nb)).min(1.0))
}

/// `⟨ψ|−½Δ + V|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn energy(psi: &WaveFunction, potential: &Potential) -> Result<f64> {
    crate::grid::ensure_same(psi.grid(), potential.grid())?;
    let psi = psi.normalized()?;
    Hamiltonian::new(potential).expectation(psi.values())
}

/// `ΔE = sqrt(⟨H₀²⟩ − ⟨H₀⟩²)` of the normalized state.
pub fn energy_spread(psi: &WaveFunction, potential: &Potential) -> Result<f64> {
    crate::grid::ensure_same(psi.grid(), potential.grid())?;
    let psi = psi.normalized()?;
    Hamiltonian::new(potential).spread(psi.values())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "time", rename_all = "snake_case")]
pub enum CollapseTime {
    Reached(f64),
    NotReached,
}

impl CollapseTime {
    pub fn time(self) -> Option<f64> {
        match self {
            CollapseTime::Reached(t) => Some(t),
            CollapseTime::NotReached => None,
        }
    }
}

/// First time at which the fidelity series reaches `1 − epsilon`, linearly
/// interpolated between samples.
pub fn collapse_time_from_series(times: &[f64], fidelities: &[f64], epsilon: f64) -> Result<CollapseTime> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 0.5)")));
    }
    if times.len() != fidelities.len() {
        return Err(Error::InvalidArgument("series lengths differ".into()));
    }
    let level = 1.0 - epsilon;
    for k in 0..times.len() {
        if fidelities[k] >= level {
            if k == 0 {
                return Ok(CollapseTime::Reached(times[0]));
            }
            let (f0, f1) = (fidelities[k - 1], fidelities[k]);
            let s = (level - f0) / (f1 - f0);
            return Ok(CollapseTime::Reached(times[k - 1] + s * (times[k] - times[k - 1])));
        }
    }
    Ok(CollapseTime::NotReached)
}

/// Collapse time of a trajectory towards `target`.
pub fn collapse_time(traj: &Trajectory, target: &WaveFunction, epsilon: f64) -> Result<CollapseTime> {
    let fids = traj
        .wave_functions()?
        .iter()
        .map(|psi| fidelity(psi, target))
        .collect::<Result<Vec<_>>>()?;
    collapse_time_from_series(&traj.times, &fids, epsilon)
}

/// `ξ = τ·ΔE` with `ΔE` the energy spread of the initial state.
pub fn dimensionless_measure(tau: f64, psi0: &WaveFunction, potential: &Potential) -> Result<f64> {
    let de = energy_spread(psi0, potential)?;
    let e = energy(psi0, potential)?;
    if de < ZERO_SPREAD_TOLERANCE * e.abs().max(1.0) {
        return Err(Error::ZeroSpread);
    }
    Ok(tau * de)
}

/// Physical scales for ħ = m = 1 internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub mass_kg: f64,
    pub length_m: f64,
}

impl UnitSystem {
    pub fn new(mass_kg: f64, length_m: f64) -> Result<Self> {
        if !(mass_kg.is_finite() && mass_kg > 0.0 && length_m.is_finite() && length_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "unit scales must be positive: mass {mass_kg}, length {length_m}"
            )));
        }
        Ok(Self { mass_kg, length_m })
    }

    pub fn electron_nanometer() -> Self {
        Self {
            mass_kg: ELECTRON_MASS_KG,
            length_m: 1e-9,
        }
    }

    /// `m L² / ħ` in seconds.
    pub fn time_scale(&self) -> f64 {
        self.mass_kg * self.length_m * self.length_m / HBAR_SI
    }

    /// `ħ / T` in joules.
    pub fn energy_scale(&self) -> f64 {
        HBAR_SI / self.time_scale()
    }

    pub fn to_si(&self, t_internal: f64) -> f64 {
        t_internal * self.time_scale()
    }

    pub fn from_si(&self, seconds: f64) -> f64 {
        seconds / self.time_scale()
    }
}

pub fn within_bracket(tau_si: f64) -> bool {
    (BRACKET_SECONDS.0..=BRACKET_SECONDS.1).contains(&tau_si)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub tau_internal: f64,
    pub tau_si: f64,
    pub epsilon: f64,
    pub xi: Option<f64>,
    pub within_bracket: bool,
    pub xi_definition: String,
}

impl CollapseReport {
    pub fn new(tau_internal: f64, epsilon: f64, xi: Option<f64>, units: &UnitSystem) -> Self {
        let tau_si = units.to_si(tau_internal);
        Self {
            tau_internal,
            tau_si,
            epsilon,
            xi,
            within_bracket: within_bracket(tau_si),
            xi_definition: XI_DEFINITION.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::states::{ho_eigenstate, superpose};
    use num_complex::Complex64 as C64;

    #[test]
    fn electron_nanometer_scale() {
        let u = UnitSystem::electron_nanometer();
        assert!((u.time_scale() - 8.637_992e-15).abs() < 1e-20);
        assert!(!within_bracket(u.to_si(1.0)));
        assert!(!within_bracket(u.to_si(0.0)));
        let t = u.from_si(3.3e-9);
        assert!((u.to_si(t) - 3.3e-9).abs() <= 1e-12 * 3.3e-9);
    }

    #[test]
    fn series_interpolation() {
        let t = [0.0, 1.0, 2.0];
        let f = [0.5, 0.9, 1.0];
        let tau = collapse_time_from_series(&t, &f, 0.05).unwrap().time().unwrap();
        assert!((tau - 1.5).abs() < 1e-12);
        assert_eq!(
            collapse_time_from_series(&t, &[0.999, 1.0, 1.0], 0.01).unwrap(),
            CollapseTime::Reached(0.0)
        );
        assert_eq!(
            collapse_time_from_series(&t, &[0.1; 3], 0.01).unwrap(),
            CollapseTime::NotReached
        );
        assert!(collapse_time_from_series(&t, &f, 0.5).is_err());
        assert!(collapse_time_from_series(&t, &f, 0.0).is_err());
    }

    #[test]
    fn two_level_spread() {
        let g = Grid::periodic(-10.0, 10.0, 256).unwrap();
        let v = Potential::harmonic(g.clone(), 1.0).unwrap();
        let s0 = ho_eigenstate(0, 1.0, &g).unwrap().state;
        let s1 = ho_eigenstate(1, 1.0, &g).unwrap().state;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mix = superpose(&[C64::new(h, 0.0), C64::new(h, 0.0)], &[s0.clone(), s1.clone()]).unwrap();
        assert!((energy(&mix, &v).unwrap() - 1.0).abs() < 1e-6);
        assert!((dimensionless_measure(2.0, &mix, &v).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(dimensionless_measure(1.0, &s0, &v), Err(Error::ZeroSpread));
        let f = superpose(&[C64::new(0.6, 0.0), C64::new(0.8, 0.0)], &[s0, s1.clone()]).unwrap();
        assert!((fidelity(&f, &s1).unwrap() - 0.64).abs() < 1e-10);
    }
}
