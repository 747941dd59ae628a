use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::cqhj::{p_to_psi, psi_to_p, quantum_hamiltonian_field, GaugeFactor, MomentumField};
use crate::diagnostics::fidelity;
use crate::error::Result;
use crate::grid::DerivativeScheme;
use crate::hamiltonian::Hamiltonian;
use crate::potential::Potential;
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone)]
pub enum Snapshot {
    Psi(WaveFunction),
    Momentum(MomentumField),
}

impl Snapshot {
    /// The wave function, reconstructing it from `p` when needed.
    pub fn wave_function(&self) -> Result<WaveFunction> {
        match self {
            Snapshot::Psi(psi) => Ok(psi.clone()),
            Snapshot::Momentum(p) => Ok(p_to_psi(p)?.0),
        }
    }
}

/// One row of the observables table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub fidelity_target: Option<f64>,
    /// Density-weighted mean of `Re H` over unmasked samples.
    pub h_mean_re: f64,
    /// Density-weighted spread of `H` about its mean.
    pub h_std: f64,
    pub gauge_log_magnitude: f64,
    pub gauge_phase: f64,
}

/// Snapshots of an evolution at strictly increasing times.
///
/// `gauge_log[k]` is the accumulated factor `N(t_k)` removed by
/// renormalization up to snapshot `k`.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub gauge_log: Vec<GaugeFactor>,
}

impl Trajectory {
    pub(crate) fn push(&mut self, t: f64, snapshot: Snapshot, gauge: GaugeFactor) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.snapshots.push(snapshot);
        self.gauge_log.push(gauge);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn final_state(&self) -> Option<Result<WaveFunction>> {
        self.snapshots.last().map(Snapshot::wave_function)
    }

    pub fn wave_functions(&self) -> Result<Vec<WaveFunction>> {
        self.snapshots.iter().map(Snapshot::wave_function).collect()
    }

    /// Observables of every snapshot. H-field statistics are NaN where the
    /// momentum field cannot be formed.
    pub fn observables(
        &self,
        potential: &Potential,
        target: Option<&WaveFunction>,
        scheme: DerivativeScheme,
    ) -> Result<Vec<ObservableRow>> {
        let ham = Hamiltonian::new(potential);
        self.snapshots
            .iter()
            .zip(&self.times)
            .zip(&self.gauge_log)
            .map(|((snap, &t), gauge)| {
                let psi = snap.wave_function()?;
                let norm = psi.norm();
                let energy = ham.expectation(psi.values())?;
                let fidelity_target = target.map(|tg| fidelity(&psi, tg)).transpose()?;
                let p = match snap {
                    Snapshot::Momentum(p) => Ok(p.clone()),
                    Snapshot::Psi(psi) => psi_to_p(psi, scheme),
                };
                let (h_mean_re, h_std) = p
                    .and_then(|p| quantum_hamiltonian_field(&p, potential, scheme))
                    .map(|h| {
                        let dens: Vec<f64> = psi.values().iter().map(C64::norm_sqr).collect();
                        let (m, s) = h.weighted_mean_std(&dens);
                        (m.re, s)
                    })
                    .unwrap_or((f64::NAN, f64::NAN));
                Ok(ObservableRow {
                    t,
                    norm,
                    energy,
                    fidelity_target,
                    h_mean_re,
                    h_std,
                    gauge_log_magnitude: gauge.log_magnitude,
                    gauge_phase: gauge.phase,
                })
            })
            .collect()
    }
}
