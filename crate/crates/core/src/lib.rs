//! Complex quantum Hamilton–Jacobi fields on 1-D grids.
//!
//! Units are ħ = m = 1 throughout; SI conversion lives in [`diagnostics`].

pub mod cqhj;
pub mod diagnostics;
pub mod diff;
pub mod error;
pub mod field;
pub mod forces;
pub mod grid;
pub mod hamiltonian;
mod linalg;
pub mod potential;
pub mod propagate;
pub mod quadrature;
pub mod states;
pub mod wavefunction;

pub use cqhj::{
    cqhj_rhs, cqhj_rhs_canonical, derivation_residuals, p_to_psi, psi_to_p, quantum_hamiltonian_field,
    DerivationResiduals, GaugeFactor, MaskedField, MomentumField,
};
pub use diagnostics::{
    collapse_time, dimensionless_measure, energy, fidelity, CollapseReport, CollapseTime, UnitSystem,
};
pub use error::{Error, EvolveError, Result};
pub use field::{ComplexField, C64};
pub use forces::{gauge_potential, CollapseForce, ForceKind, ForceTag};
pub use grid::{Boundary, DerivativeScheme, Grid};
pub use hamiltonian::Hamiltonian;
pub use potential::{Potential, PotentialKind};
pub use propagate::{
    collapsible_evolve, cqhj_evolve, schrodinger_evolve, IntegratorSpec, Method, ObservableRow, Snapshot, Trajectory,
};
pub use quadrature::{cumulative_integral, integrate, Anchor};
pub use states::{
    gaussian_packet, ho_eigenstate, random_nodeless, solve_eigenstates, superpose, EigenPair, NodelessSpec,
};
pub use wavefunction::WaveFunction;
