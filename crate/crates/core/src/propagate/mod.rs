//! Time evolution of ψ (linear and collapsible) and of `p`.

mod linear;
mod trajectory;

use std::ops::Range;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cqhj::{cqhj_rhs, node_mask, p_to_psi, psi_to_p_with_mask, GaugeFactor, MomentumField, NODE_THRESHOLD};
use crate::error::{Error, EvolveError, Result};
use crate::field::{max_abs, ComplexField};
use crate::forces::{gauge_potential, CollapseForce};
use crate::grid::{ensure_same, Boundary, DerivativeScheme, Grid};
use crate::hamiltonian::Hamiltonian;
use crate::potential::Potential;
use crate::wavefunction::WaveFunction;

pub use trajectory::{ObservableRow, Snapshot, Trajectory};

use linear::LinearStepper;

/// Largest admitted `dt·E_max` for split-step runs.
pub const SPLIT_STEP_PHASE_LIMIT: f64 = 0.1;
/// Largest admitted `dt·λ_max` for RK4 on the momentum equation.
pub const RK4_STABILITY_LIMIT: f64 = 2.5;
/// Default floor on `min|ψ|/max|ψ|` during momentum-space runs.
pub const NODE_APPROACH_THRESHOLD: f64 = 1e-10;
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 50;

/// Fourier amplitudes below this fraction of the peak do not count towards
/// the split-step frequency bound.
const RETAINED_MODE_FLOOR: f64 = 1e-8;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fourier split-step; periodic grids only.
    SplitStep,
    CrankNicolson,
    /// Explicit RK4; momentum-space runs only.
    RungeKutta4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub method: Method,
    pub dt: f64,
    pub renormalize_each_step: bool,
    /// Record every `snapshot_stride`-th step; the final state is always
    /// recorded.
    pub snapshot_stride: usize,
    /// Differentiation scheme for `p`; defaults to the grid's natural one.
    pub scheme: Option<DerivativeScheme>,
    pub node_approach_threshold: f64,
}

impl IntegratorSpec {
    pub fn new(method: Method, dt: f64) -> Self {
        Self {
            method,
            dt,
            renormalize_each_step: false,
            snapshot_stride: 1,
            scheme: None,
            node_approach_threshold: NODE_APPROACH_THRESHOLD,
        }
    }

    pub fn renormalized(mut self) -> Self {
        self.renormalize_each_step = true;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = Some(scheme);
        self
    }

    pub fn scheme_for(&self, grid: &Grid) -> DerivativeScheme {
        self.scheme
            .unwrap_or_else(|| DerivativeScheme::natural_for(grid.boundary()))
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {}", self.dt)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot stride 0".into()));
        }
        if self.method == Method::SplitStep && grid.boundary() != Boundary::Periodic {
            return Err(Error::InvalidArgument(
                "split-step propagation needs a periodic grid".into(),
            ));
        }
        self.scheme_for(grid).check(grid)
    }
}

/// Uniform steps covering `[0, t_final]`: `(count, dt)` with `dt ≤ spec.dt`.
fn step_plan(dt: f64, t_final: f64) -> Result<(usize, f64)> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidArgument(format!("final time {t_final}")));
    }
    let count = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((count, t_final / count as f64))
}

fn record(step: usize, count: usize, stride: usize) -> bool {
    step.is_multiple_of(stride) || step == count
}

/// `E_max`: kinetic energy of the highest Fourier mode of `psi` above
/// `RETAINED_MODE_FLOOR` of the peak.
fn split_step_frequency(psi: &WaveFunction) -> f64 {
    let grid = psi.grid();
    let mut spec = psi.values().to_vec();
    grid.fft().forward.process(&mut spec);
    let peak = max_abs(&spec);
    let kmax = spec
        .iter()
        .zip(grid.wavenumbers())
        .filter(|(c, _)| c.norm() >= RETAINED_MODE_FLOOR * peak)
        .map(|(_, k)| k.abs())
        .fold(0.0, f64::max);
    0.5 * kmax * kmax
}

fn check_linear(psi0: &WaveFunction, potential: &Potential, spec: &IntegratorSpec) -> Result<()> {
    ensure_same(psi0.grid(), potential.grid())?;
    spec.validate(psi0.grid())?;
    match spec.method {
        Method::RungeKutta4 => Err(Error::InvalidArgument(
            "Runge-Kutta integration applies to momentum fields only".into(),
        )),
        Method::SplitStep => {
            let e_max = split_step_frequency(psi0);
            if spec.dt * e_max > SPLIT_STEP_PHASE_LIMIT {
                Err(Error::StabilityViolation(format!(
                    "dt·E_max = {:.3e} exceeds {SPLIT_STEP_PHASE_LIMIT}",
                    spec.dt * e_max
                )))
            } else {
                Ok(())
            }
        }
        Method::CrankNicolson => Ok(()),
    }
}

fn renormalize(psi: &mut [C64], grid: &std::sync::Arc<Grid>, log: &mut f64) -> Result<()> {
    let norm = WaveFunction::from_values(grid.clone(), psi.to_vec())?.norm();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    psi.iter_mut().for_each(|p| *p /= norm);
    *log += norm.ln();
    Ok(())
}

fn snapshot_psi(grid: &std::sync::Arc<Grid>, psi: &[C64]) -> Result<Snapshot> {
    Ok(Snapshot::Psi(WaveFunction::from_values(grid.clone(), psi.to_vec())?))
}

fn gauge(log: f64) -> GaugeFactor {
    GaugeFactor {
        log_magnitude: log,
        phase: 0.0,
    }
}

/// Linear Schrödinger evolution `i ψ_t = (−½Δ + V) ψ`.
///
/// Split-step requires `dt·E_max ≤ 0.1`; Crank–Nicolson is unconditionally
/// stable and uses the same discrete operator as the eigensolver.
pub fn schrodinger_evolve(
    psi0: &WaveFunction,
    potential: &Potential,
    spec: &IntegratorSpec,
    t_final: f64,
) -> std::result::Result<Trajectory, EvolveError> {
    check_linear(psi0, potential, spec)?;
    let (count, dt) = step_plan(spec.dt, t_final)?;
    let ham = Hamiltonian::new(potential);
    let stepper = LinearStepper::new(&ham, spec.method, dt)?;
    let grid = psi0.grid().clone();
    let mut psi = psi0.values().to_vec();
    let mut log = 0.0;
    let mut traj = Trajectory::default();
    traj.push(0.0, Snapshot::Psi(psi0.clone()), GaugeFactor::IDENTITY);
    for step in 1..=count {
        let t = step as f64 * dt;
        let advanced = stepper.step(&mut psi).and_then(|_| {
            if spec.renormalize_each_step {
                renormalize(&mut psi, &grid, &mut log)
            } else {
                Ok(())
            }
        });
        if let Err(e) = advanced {
            return Err(EvolveError::interrupted(e, traj));
        }
        if record(step, count, spec.snapshot_stride) {
            traj.push(t, snapshot_psi(&grid, &psi)?, gauge(log));
        }
    }
    Ok(traj)
}

/// Gauge potential `Φ = ∫ F_c[p(ψ)]` for the current state, with `p`
/// masked by `mask`, shifted to vanish at sample `anchor`.
///
/// The additive constant of Φ only rescales ψ and is absorbed by `N(t)`.
/// Fixing it at the left edge would tie it to the far tail, where `p`
/// reacts to `δψ/ψ` and the fixed-point iteration stalls.
fn gauge_phase_field(
    psi: &[C64],
    grid: &std::sync::Arc<Grid>,
    force: &CollapseForce,
    scheme: DerivativeScheme,
    mask: &[bool],
    anchor: usize,
    t: f64,
) -> Result<Vec<C64>> {
    let wf = WaveFunction::from_values(grid.clone(), psi.to_vec())?;
    let p = match psi_to_p_with_mask(&wf, scheme, mask) {
        Ok(p) => p,
        Err(Error::AllMasked) | Err(Error::NonFinite(_)) => return Err(Error::NodeBlowup(t)),
        Err(e) => return Err(e),
    };
    let field = match force.evaluate(&p, t) {
        Ok(f) => f,
        Err(Error::NonFinite(_)) => return Err(Error::NodeBlowup(t)),
        Err(e) => return Err(e),
    };
    let mut phi = gauge_potential(&field)?.into_values();
    let shift = phi[anchor];
    phi.iter_mut().for_each(|v| *v -= shift);
    if !phi.iter().all(|v| v.is_finite()) {
        return Err(Error::NodeBlowup(t));
    }
    Ok(phi)
}

/// Nonlinear sub-step `ψ ← exp(i·dt·Φ[ψ_mid]) ψ` solved by fixed-point
/// iteration on the midpoint state. The node mask is taken from `base` and
/// held fixed over the iteration so that the map is continuous.
fn nonlinear_step(
    base: &[C64],
    grid: &std::sync::Arc<Grid>,
    force: &CollapseForce,
    scheme: DerivativeScheme,
    t_mid: f64,
    dt: f64,
) -> Result<Vec<C64>> {
    let kick = |phi: &[C64]| -> Vec<C64> { base.iter().zip(phi).map(|(b, f)| b * (I * dt * f).exp()).collect() };
    let wf = WaveFunction::from_values(grid.clone(), base.to_vec())?;
    let mask = node_mask(&wf, NODE_THRESHOLD).map_err(|_| Error::NodeBlowup(t_mid))?;
    let anchor = base
        .iter()
        .enumerate()
        .fold(
            (0, 0.0),
            |(bj, bv), (j, z)| if z.norm() > bv { (j, z.norm()) } else { (bj, bv) },
        )
        .0;
    let mut next = kick(&gauge_phase_field(base, grid, force, scheme, &mask, anchor, t_mid)?);
    let mut update = f64::INFINITY;
    for _ in 0..FIXED_POINT_MAX_ITERATIONS {
        let mid: Vec<C64> = base.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        let cand = kick(&gauge_phase_field(&mid, grid, force, scheme, &mask, anchor, t_mid)?);
        if !cand.iter().all(|c| c.is_finite()) {
            return Err(Error::NodeBlowup(t_mid));
        }
        let scale = max_abs(&cand).max(f64::MIN_POSITIVE);
        update = cand.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        next = cand;
        if update <= FIXED_POINT_TOLERANCE {
            return Ok(next);
        }
    }
    Err(Error::FixedPointDivergence {
        time: t_mid,
        iterations: FIXED_POINT_MAX_ITERATIONS,
        update,
    })
}

/// Collapsible evolution `p_t = F_c − ∇H`, integrated in the gauge form
/// `i ψ_t = H₀ψ − Φψ` with `Φ = ∫_{x_min}^x F_c`.
///
/// Strang splitting: linear half step, nonlinear gauge step, linear half
/// step. The linear part uses `spec.method` (split-step or Crank–Nicolson).
pub fn collapsible_evolve(
    psi0: &WaveFunction,
    potential: &Potential,
    force: &CollapseForce,
    spec: &IntegratorSpec,
    t_final: f64,
) -> std::result::Result<Trajectory, EvolveError> {
    check_linear(psi0, potential, spec)?;
    let (count, dt) = step_plan(spec.dt, t_final)?;
    let grid = psi0.grid().clone();
    let scheme = spec.scheme_for(&grid);
    let ham = Hamiltonian::new(potential);
    let half = LinearStepper::new(&ham, spec.method, dt / 2.0)?;
    let mut psi = psi0.values().to_vec();
    let mut log = 0.0;
    let mut traj = Trajectory::default();
    traj.push(0.0, Snapshot::Psi(psi0.clone()), GaugeFactor::IDENTITY);
    for step in 1..=count {
        let t = step as f64 * dt;
        let t_mid = t - dt / 2.0;
        let advanced = (|| -> Result<()> {
            half.step(&mut psi)?;
            if !force.is_null() {
                psi = nonlinear_step(&psi, &grid, force, scheme, t_mid, dt)?;
            }
            half.step(&mut psi)?;
            if spec.renormalize_each_step {
                renormalize(&mut psi, &grid, &mut log)?;
            }
            Ok(())
        })();
        if let Err(e) = advanced {
            return Err(EvolveError::interrupted(e, traj));
        }
        if record(step, count, spec.snapshot_stride) {
            traj.push(t, snapshot_psi(&grid, &psi)?, gauge(log));
        }
    }
    Ok(traj)
}

/// Spectral radius estimate for RK4 on the momentum equation: the
/// dispersive term `(i/2)∂²p` plus advection by `p`.
fn rk4_spectral_radius(grid: &Grid, scheme: DerivativeScheme, p: &[C64]) -> f64 {
    let h = grid.dx();
    let (r1, r2) = match scheme {
        DerivativeScheme::Spectral => (std::f64::consts::PI / h, (std::f64::consts::PI / h).powi(2)),
        DerivativeScheme::CentralDifference4 => (1.372 / h, 16.0 / (3.0 * h * h)),
    };
    0.5 * r2 + max_abs(p) * r1
}

/// Largest step [`cqhj_evolve`] accepts for `p` under `scheme`.
pub fn rk4_max_step(p: &MomentumField, scheme: DerivativeScheme) -> f64 {
    RK4_STABILITY_LIMIT / rk4_spectral_radius(p.grid(), scheme, p.values())
}

fn rhs_values(p: &MomentumField, potential: &Potential, scheme: DerivativeScheme) -> Result<Vec<C64>> {
    match cqhj_rhs(p, potential, scheme) {
        Ok(r) => Ok(r.field.into_values()),
        Err(Error::NonFinite(_)) => Err(Error::StabilityViolation("non-finite momentum field".into())),
        Err(e) => Err(e),
    }
}

/// Edge points of a box window are ghosts set by linear extrapolation from
/// the two nearest interior points, i.e. `∂²p = 0` at the window edges.
/// Without a boundary condition the open stencils admit growing modes.
const GHOST_POINTS: usize = 2;

fn close_edges(grid: &Grid, v: &mut [C64]) {
    if grid.boundary() != Boundary::Box {
        return;
    }
    let n = v.len();
    let g = GHOST_POINTS;
    let (a, b) = (v[g], v[g + 1]);
    for j in 0..g {
        v[j] = a - (g - j) as f64 * (b - a);
    }
    let (a, b) = (v[n - 1 - g], v[n - 2 - g]);
    for j in 0..g {
        v[n - 1 - j] = a - (g - j) as f64 * (b - a);
    }
}

fn momentum(grid: &std::sync::Arc<Grid>, mut v: Vec<C64>) -> Result<MomentumField> {
    close_edges(grid, &mut v);
    match ComplexField::new(grid.clone(), v) {
        Ok(f) => Ok(MomentumField::new(f)),
        Err(Error::NonFinite(_)) => Err(Error::StabilityViolation("non-finite momentum field".into())),
        Err(e) => Err(e),
    }
}

/// `min|ψ|/max|ψ|` of the state reconstructed from `p`, with its gauge.
fn reconstruction_floor(p: &MomentumField) -> Result<(f64, GaugeFactor)> {
    let (psi, g) = p_to_psi(p)?;
    let mags: Vec<f64> = psi.values().iter().map(|z| z.norm()).collect();
    let hi = mags.iter().copied().fold(0.0, f64::max);
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((lo / hi, g))
}

/// Direct evolution of a nodeless momentum field by RK4 on `cqhj_rhs`.
///
/// The run aborts with `NodeApproach` (and the partial trajectory) when the
/// reconstructed `|ψ|` falls below `spec.node_approach_threshold` of its
/// peak anywhere.
pub fn cqhj_evolve(
    p0: &MomentumField,
    potential: &Potential,
    spec: &IntegratorSpec,
    t_final: f64,
) -> std::result::Result<Trajectory, EvolveError> {
    let grid = p0.grid().clone();
    ensure_same(&grid, potential.grid())?;
    spec.validate(&grid)?;
    if spec.method != Method::RungeKutta4 {
        return Err(Error::InvalidArgument("momentum-space runs use Runge-Kutta integration".into()).into());
    }
    if !p0.is_nodeless() {
        return Err(Error::NodePresent(p0.masked_count()).into());
    }
    let scheme = spec.scheme_for(&grid);
    let (count, dt) = step_plan(spec.dt, t_final)?;
    let radius = rk4_spectral_radius(&grid, scheme, p0.values());
    if dt * radius > RK4_STABILITY_LIMIT {
        return Err(
            Error::StabilityViolation(format!("dt·λ_max = {:.3e} exceeds {RK4_STABILITY_LIMIT}", dt * radius)).into(),
        );
    }
    let mut p = p0.without_slope();
    let mut traj = Trajectory::default();
    let (ratio, g0) = reconstruction_floor(&p)?;
    if ratio < spec.node_approach_threshold {
        return Err(Error::NodeApproach { time: 0.0, ratio }.into());
    }
    traj.push(0.0, Snapshot::Momentum(p.clone()), g0);
    for step in 1..=count {
        let t = step as f64 * dt;
        let advanced = (|| -> Result<(MomentumField, f64, GaugeFactor)> {
            let y = p.values();
            let axpy = |k: &[C64], h: f64| -> Result<MomentumField> {
                momentum(&grid, y.iter().zip(k).map(|(a, b)| a + h * b).collect())
            };
            let k1 = rhs_values(&p, potential, scheme)?;
            let k2 = rhs_values(&axpy(&k1, dt / 2.0)?, potential, scheme)?;
            let k3 = rhs_values(&axpy(&k2, dt / 2.0)?, potential, scheme)?;
            let k4 = rhs_values(&axpy(&k3, dt)?, potential, scheme)?;
            let next: Vec<C64> = (0..y.len())
                .map(|j| y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                .collect();
            let next = momentum(&grid, next)?;
            let (ratio, g) = reconstruction_floor(&next)?;
            Ok((next, ratio, g))
        })();
        match advanced {
            Ok((next, ratio, g)) => {
                if ratio < spec.node_approach_threshold {
                    return Err(EvolveError::interrupted(Error::NodeApproach { time: t, ratio }, traj));
                }
                p = next;
                if record(step, count, spec.snapshot_stride) {
                    traj.push(t, Snapshot::Momentum(p.clone()), g);
                }
            }
            Err(e) => return Err(EvolveError::interrupted(e, traj)),
        }
    }
    Ok(traj)
}

/// Longest unmasked run of `p`, as a window of the grid.
pub fn support_window(p: &MomentumField) -> Result<Range<usize>> {
    p.support().ok_or(Error::AllMasked)
}

/// `p` and `V` restricted to the support window of `p`, ready for
/// [`cqhj_evolve`]. Returns the window as well.
pub fn restrict_to_support(
    p: &MomentumField,
    potential: &Potential,
) -> Result<(MomentumField, Potential, Range<usize>)> {
    let w = support_window(p)?;
    let len = w.end - w.start;
    Ok((p.restrict(w.start, len)?, potential.restrict(w.start, len)?, w))
}
