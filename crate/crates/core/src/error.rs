use thiserror::Error;

use crate::propagate::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("spectral differentiation requires a periodic grid")]
    SchemeMismatch,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("cumulative integral is not single-valued: |integral| = {integral:e} exceeds {limit:e}")]
    PeriodicityViolation { integral: f64, limit: f64 },
    #[error("state is not resolved by the grid: {0}")]
    UnresolvedState(String),
    #[error("state does not fit in the domain: edge amplitude ratio {0:e}")]
    DomainOverflow(f64),
    #[error("eigensolver failed to converge")]
    ConvergenceFailure,
    #[error("state has zero norm")]
    ZeroState,
    #[error("wave function vanishes numerically everywhere")]
    AllMasked,
    #[error("momentum field has {0} masked (node) points where it must be nodeless")]
    NodePresent(usize),
    #[error("stability condition violated: {0}")]
    StabilityViolation(String),
    #[error("reconstructed |psi| fell to {ratio:e} of its peak at t = {time}")]
    NodeApproach { time: f64, ratio: f64 },
    #[error("nonlinear step did not converge in {iterations} iterations at t = {time} (last update {update:e})")]
    FixedPointDivergence { time: f64, iterations: usize, update: f64 },
    #[error("collapse force is not finite at t = {0}")]
    NodeBlowup(f64),
    #[error("quantum state spread is zero (eigenstate input)")]
    ZeroSpread,
    #[error("energy expectation has imaginary part {0:e}")]
    NonHermitian(f64),
}

/// Failure of a time evolution. Runtime failures carry the trajectory
/// recorded up to the failing step.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct EvolveError {
    pub error: Error,
    pub partial: Option<Box<Trajectory>>,
}

impl EvolveError {
    pub fn interrupted(error: Error, partial: Trajectory) -> Self {
        Self {
            error,
            partial: Some(Box::new(partial)),
        }
    }
}

impl From<Error> for EvolveError {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}
