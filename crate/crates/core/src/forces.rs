//! Non-potential collapse forces `F_c[p]` and their gauge-potential lift.
//!
//! Every force depends on ψ only through `p`, so it is invariant under
//! ψ → cψ. A force of `x` alone would just be the gradient of an extra
//! potential, so every non-null kind depends on `p`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cqhj::{psi_to_p, MomentumField};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{ensure_same, DerivativeScheme};
use crate::quadrature::{cumulative_integral, Anchor};
use crate::states::EigenPair;

#[derive(Debug, Clone)]
pub enum ForceKind {
    Null,
    /// `−κ (p − p_target)`.
    Pinning {
        target: MomentumField,
        kappa: f64,
    },
    /// `−γ Re p`.
    KostinFriction {
        gamma: f64,
    },
}

/// Name-only tag, for reports and configuration echoes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceTag {
    Null,
    Pinning,
    KostinFriction,
}

#[derive(Debug, Clone)]
pub struct CollapseForce {
    kind: ForceKind,
}

impl CollapseForce {
    pub fn null() -> Self {
        Self { kind: ForceKind::Null }
    }

    pub fn pinning(target: MomentumField, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("pinning rate {kappa}")));
        }
        Ok(Self {
            kind: ForceKind::Pinning { target, kappa },
        })
    }

    /// Pinning toward the momentum field of an eigenstate.
    pub fn pinning_to(target: &EigenPair, kappa: f64, scheme: DerivativeScheme) -> Result<Self> {
        Self::pinning(psi_to_p(&target.state, scheme)?, kappa)
    }

    pub fn kostin(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("friction rate {gamma}")));
        }
        Ok(Self {
            kind: ForceKind::KostinFriction { gamma },
        })
    }

    pub fn kind(&self) -> &ForceKind {
        &self.kind
    }

    pub fn tag(&self) -> ForceTag {
        match self.kind {
            ForceKind::Null => ForceTag::Null,
            ForceKind::Pinning { .. } => ForceTag::Pinning,
            ForceKind::KostinFriction { .. } => ForceTag::KostinFriction,
        }
    }

    /// True for every kind except `Null`.
    pub fn depends_on_p(&self) -> bool {
        !self.is_null()
    }

    pub fn is_null(&self) -> bool {
        matches!(self.kind, ForceKind::Null)
    }

    /// Force field at time `t`. Samples masked in `p` (or in the pinning
    /// target) get zero force.
    pub fn evaluate(&self, p: &MomentumField, _t: f64) -> Result<ComplexField> {
        let grid = p.grid().clone();
        let zero = C64::new(0.0, 0.0);
        let values: Vec<C64> = match &self.kind {
            ForceKind::Null => vec![zero; grid.len()],
            ForceKind::Pinning { target, kappa } => {
                ensure_same(&grid, target.grid())?;
                p.values()
                    .iter()
                    .zip(target.values())
                    .zip(p.node_mask().iter().zip(target.node_mask()))
                    .map(|((a, b), (&ma, &mb))| if ma || mb { zero } else { -kappa * (a - b) })
                    .collect()
            }
            ForceKind::KostinFriction { gamma } => p
                .values()
                .iter()
                .zip(p.node_mask())
                .map(|(a, &m)| if m { zero } else { C64::new(-gamma * a.re, 0.0) })
                .collect(),
        };
        ComplexField::new(grid, values)
    }
}

/// `Φ_c(x) = ∫_{x_min}^x F_c`, so that `∇Φ_c = F_c`.
pub fn gauge_potential(force_field: &ComplexField) -> Result<ComplexField> {
    cumulative_integral(force_field, Anchor::LeftEdge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cqhj::unwrapped_phase;
    use crate::grid::Grid;
    use crate::states::{gaussian_packet, ho_eigenstate, superpose};
    use crate::wavefunction::WaveFunction;

    #[test]
    fn pinning_vanishes_on_target() {
        let g = Grid::periodic(-10.0, 10.0, 256).unwrap();
        let target = ho_eigenstate(0, 1.0, &g).unwrap();
        let f = CollapseForce::pinning_to(&target, 3.0, DerivativeScheme::Spectral).unwrap();
        let p = psi_to_p(&target.state, DerivativeScheme::Spectral).unwrap();
        assert_eq!(f.evaluate(&p, 0.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn kostin_on_plane_wave() {
        let g = Grid::periodic(0.0, std::f64::consts::TAU, 64).unwrap();
        let psi = WaveFunction::from_fn(g, |x| C64::new(0.0, 2.0 * x).exp()).unwrap();
        let p = psi_to_p(&psi, DerivativeScheme::Spectral).unwrap();
        let f = CollapseForce::kostin(0.3).unwrap().evaluate(&p, 0.0).unwrap();
        for v in f.values() {
            assert!((v - C64::new(-0.6, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn pinning_acts_on_superpositions() {
        let g = Grid::boxed(-10.0, 10.0, 801).unwrap();
        let s = DerivativeScheme::CentralDifference4;
        let phi0 = ho_eigenstate(0, 1.0, &g).unwrap();
        let phi1 = ho_eigenstate(1, 1.0, &g).unwrap();
        let mix = superpose(
            &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            &[phi0.state.clone(), phi1.state],
        )
        .unwrap();
        let f = CollapseForce::pinning_to(&phi0, 1.0, s).unwrap();
        let field = f.evaluate(&psi_to_p(&mix, s).unwrap(), 0.0).unwrap();
        assert!(field.max_abs() > 0.1);
        let phi = gauge_potential(&field).unwrap();
        let spread = phi
            .values()
            .iter()
            .map(|v| (v - phi.values()[400]).norm())
            .fold(0.0, f64::max);
        assert!(spread > 0.1);
    }

    #[test]
    fn non_null_forces_depend_on_p() {
        assert!(!CollapseForce::null().depends_on_p());
        assert!(CollapseForce::kostin(0.1).unwrap().depends_on_p());
        assert!(CollapseForce::kostin(0.0).is_err());
        assert!(CollapseForce::kostin(-1.0).is_err());
    }

    #[test]
    fn gauge_of_constant_and_zero() {
        let g = Grid::boxed(-2.0, 3.0, 64).unwrap();
        let zero = ComplexField::zeros(g.clone());
        assert_eq!(gauge_potential(&zero).unwrap().max_abs(), 0.0);
        let c = C64::new(0.4, -1.1);
        let phi = gauge_potential(&ComplexField::from_fn(g.clone(), |_| c).unwrap()).unwrap();
        for (j, v) in phi.values().iter().enumerate() {
            assert!((v - c * (g.x(j) + 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn kostin_gauge_matches_unwrapped_phase() {
        let g = Grid::boxed(-12.0, 12.0, 2401).unwrap();
        let psi = gaussian_packet(0.5, 2.0, 1.5, &g).unwrap();
        let chirp = WaveFunction::from_fn(g.clone(), |x| {
            psi.values()[((x + 12.0) / g.dx()).round() as usize] * C64::new(0.0, 0.05 * x * x).exp()
        })
        .unwrap();
        let s = DerivativeScheme::CentralDifference4;
        let p = psi_to_p(&chirp, s).unwrap();
        let gamma = 0.4;
        let phi = gauge_potential(&CollapseForce::kostin(gamma).unwrap().evaluate(&p, 0.0).unwrap()).unwrap();
        let theta = unwrapped_phase(&chirp);
        // Φ = −γθ up to a constant; the constant is a gauge choice.
        let peak = chirp.max_abs();
        let resolved: Vec<usize> = p
            .support()
            .unwrap()
            .filter(|&j| chirp.values()[j].norm() >= 1e-3 * peak)
            .collect();
        let offset = |j: usize| phi.values()[j] + gamma * theta[j];
        let c = offset(resolved[resolved.len() / 2]);
        for &j in &resolved {
            assert!((offset(j) - c).norm() <= 1e-7, "j={j}: {}", offset(j) - c);
        }
    }
}
