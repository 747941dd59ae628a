//! Reference wave functions: packets, oscillator and box eigenstates,
//! superpositions, and a dense eigensolver for arbitrary potentials.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ensure_same, Boundary, Grid};
use crate::hamiltonian::Hamiltonian;
use crate::potential::Potential;
use crate::wavefunction::WaveFunction;

/// Edge amplitude, relative to the peak, above which a localized state is
/// considered to overflow the domain.
pub const EDGE_TOLERANCE: f64 = 1e-10;

/// Largest accepted `‖H₀ψ − Eψ‖ / ‖ψ‖` for an eigenpair.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-6;

pub const MAX_OSCILLATOR_LEVEL: usize = 20;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub energy: f64,
    pub state: WaveFunction,
}

impl EigenPair {
    /// `‖H₀ψ − Eψ‖ / ‖ψ‖` with the discretized Hamiltonian of `potential`.
    pub fn residual(&self, potential: &Potential) -> Result<f64> {
        eigen_residual(&self.state, self.energy, potential)
    }
}

fn eigen_residual(state: &WaveFunction, energy: f64, potential: &Potential) -> Result<f64> {
    ensure_same(state.grid(), potential.grid())?;
    let h = Hamiltonian::new(potential);
    let psi = state.values();
    let hpsi = h.apply(psi);
    let active = h.active();
    let num: f64 = active.clone().map(|j| (hpsi[j] - energy * psi[j]).norm_sqr()).sum();
    let den: f64 = active.map(|j| psi[j].norm_sqr()).sum();
    Ok((num / den).sqrt())
}

fn check_edges(grid: &Grid, values: &[C64]) -> Result<()> {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = values[0].norm().max(values[values.len() - 1].norm());
    if peak == 0.0 {
        return Err(Error::ZeroState);
    }
    let ratio = edge / peak;
    // wall samples of box grids are forced to zero below; look one inside
    let ratio = match grid.boundary() {
        Boundary::Periodic => ratio,
        Boundary::Box => ratio.max(values[1].norm().max(values[values.len() - 2].norm()) / peak),
    };
    if ratio >= EDGE_TOLERANCE {
        return Err(Error::DomainOverflow(ratio));
    }
    Ok(())
}

fn zero_walls(grid: &Grid, values: &mut [C64]) {
    if grid.boundary() == Boundary::Box {
        let n = values.len();
        values[0] = C64::new(0.0, 0.0);
        values[n - 1] = C64::new(0.0, 0.0);
    }
}

/// Normalized `exp(−(x−x0)²/(2σ²) + i k0 x)`.
pub fn gaussian_packet(x0: f64, k0: f64, sigma: f64, grid: &Arc<Grid>) -> Result<WaveFunction> {
    if !(sigma.is_finite() && x0.is_finite() && k0.is_finite()) || sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "packet x0={x0}, k0={k0}, sigma={sigma}"
        )));
    }
    if sigma < 4.0 * grid.dx() {
        return Err(Error::UnresolvedState(format!(
            "sigma {sigma} below 4 dx = {}",
            4.0 * grid.dx()
        )));
    }
    // spectral content reaches |k0| + 6/σ at the e^-18 level
    let k_top = k0.abs() + 6.0 / sigma;
    if k_top > PI / grid.dx() {
        return Err(Error::UnresolvedState(format!(
            "wavenumber {k_top:.3} beyond the grid cutoff {:.3}",
            PI / grid.dx()
        )));
    }
    let mut values: Vec<C64> = grid
        .coords()
        .into_iter()
        .map(|x| {
            let u = (x - x0) / sigma;
            C64::from_polar((-0.5 * u * u).exp(), k0 * x)
        })
        .collect();
    check_edges(grid, &values)?;
    zero_walls(grid, &mut values);
    WaveFunction::from_values(grid.clone(), values)?.normalized()
}

/// Oscillator eigenfunctions `ψ_0..=ψ_n` at `x`, from the recurrence on
/// normalized Hermite functions.
fn hermite_functions(n: usize, omega: f64, x: f64) -> Vec<f64> {
    let xi = omega.sqrt() * x;
    let mut out = Vec::with_capacity(n + 1);
    let h0 = (omega / PI).powf(0.25) * (-0.5 * xi * xi).exp();
    out.push(h0);
    if n >= 1 {
        out.push(2f64.sqrt() * xi * h0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Harmonic-oscillator eigenstate `n` with energy `(n + ½) ω`.
pub fn ho_eigenstate(n: usize, omega: f64, grid: &Arc<Grid>) -> Result<EigenPair> {
    if n > MAX_OSCILLATOR_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "oscillator level {n} above {MAX_OSCILLATOR_LEVEL}"
        )));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega {omega}")));
    }
    let k_top = ((2 * n + 1) as f64 * omega).sqrt() + 4.0 * omega.sqrt();
    if k_top > PI / grid.dx() {
        return Err(Error::UnresolvedState(format!(
            "level {n} needs wavenumbers up to {k_top:.3}, grid cutoff {:.3}",
            PI / grid.dx()
        )));
    }
    let mut values: Vec<C64> = grid
        .coords()
        .into_iter()
        .map(|x| C64::new(hermite_functions(n, omega, x)[n], 0.0))
        .collect();
    check_edges(grid, &values)?;
    zero_walls(grid, &mut values);
    let state = WaveFunction::from_values(grid.clone(), values)?.normalized()?;
    let energy = (n as f64 + 0.5) * omega;
    let potential = Potential::harmonic(grid.clone(), omega)?;
    let residual = eigen_residual(&state, energy, &potential)?;
    if residual > EIGEN_RESIDUAL_TOLERANCE {
        return Err(Error::UnresolvedState(format!(
            "discrete eigen-residual {residual:.2e} of level {n}"
        )));
    }
    Ok(EigenPair { energy, state })
}

/// Lowest `count` eigenpairs of the discretized Hamiltonian by dense
/// symmetric diagonalization.
///
/// States are normalized under the grid quadrature and signed so that their
/// rightmost significant lobe is positive (the Hermite-function convention).
pub fn solve_eigenstates(potential: &Potential, count: usize) -> Result<Vec<EigenPair>> {
    let grid = potential.grid();
    if count == 0 || count > grid.len() / 8 {
        return Err(Error::InvalidArgument(format!(
            "count {count} outside 1..={}",
            grid.len() / 8
        )));
    }
    let h = Hamiltonian::new(potential);
    let matrix = h.dense();
    let eig = SymmetricEigen::try_new(matrix, 1e-15, 100_000).ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let active = h.active();
    let scale = 1.0 / grid.dx().sqrt();
    order
        .into_iter()
        .take(count)
        .map(|col| {
            let v = eig.eigenvectors.column(col);
            let peak = v.amax();
            let sign = v
                .iter()
                .rev()
                .find(|c| c.abs() >= 1e-3 * peak)
                .map_or(1.0, |c| c.signum());
            let mut values = vec![C64::new(0.0, 0.0); grid.len()];
            for (a, j) in active.clone().enumerate() {
                values[j] = C64::new(sign * scale * v[a], 0.0);
            }
            let state = WaveFunction::from_values(grid.clone(), values)?.normalized()?;
            Ok(EigenPair {
                energy: eig.eigenvalues[col],
                state,
            })
        })
        .collect()
}

/// Normalized linear combination.
pub fn superpose(coefficients: &[C64], states: &[WaveFunction]) -> Result<WaveFunction> {
    if coefficients.len() != states.len() || states.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} states",
            coefficients.len(),
            states.len()
        )));
    }
    let grid = states[0].grid().clone();
    for s in &states[1..] {
        ensure_same(&grid, s.grid())?;
    }
    if coefficients.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroState);
    }
    let mut values = vec![C64::new(0.0, 0.0); grid.len()];
    for (c, s) in coefficients.iter().zip(states) {
        for (acc, v) in values.iter_mut().zip(s.values()) {
            *acc += c * v;
        }
    }
    WaveFunction::from_values(grid, values)?.normalized()
}

/// Parameters of a random nodeless state `1 + f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodelessSpec {
    /// Fourier modes `±1..=±modes` of the domain period in `f`.
    pub modes: usize,
    /// `Σ|c_m|`; below one, so `|1 + f| ≥ 1 − amplitude`.
    pub amplitude: f64,
}

impl Default for NodelessSpec {
    fn default() -> Self {
        Self {
            modes: 10,
            amplitude: 0.8,
        }
    }
}

/// `1 + f` with `f` a random low-pass complex field, `Σ|c_m| = amplitude`.
/// Never vanishes, while `p = −i f'/(1 + f)` is not band-limited.
pub fn random_nodeless(grid: &Arc<Grid>, seed: u64, spec: NodelessSpec) -> Result<WaveFunction> {
    if spec.modes == 0 || !(spec.amplitude > 0.0 && spec.amplitude < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nodeless spec needs modes > 0 and amplitude in (0, 1): {spec:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k1 = 2.0 * PI / grid.length();
    let mut modes: Vec<(f64, C64)> = Vec::with_capacity(2 * spec.modes);
    for m in 1..=spec.modes {
        for sign in [1.0, -1.0] {
            let weight: f64 = rng.random_range(0.5..1.0);
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            modes.push((sign * k1 * m as f64, C64::from_polar(weight, phase)));
        }
    }
    let total: f64 = modes.iter().map(|(_, c)| c.norm()).sum();
    let scale = spec.amplitude / total;
    if spec.modes as f64 * k1 > PI / grid.dx() {
        return Err(Error::UnresolvedState(format!(
            "{} modes exceed the grid cutoff",
            spec.modes
        )));
    }
    let values = grid
        .coords()
        .into_iter()
        .map(|x| {
            let u = x - grid.x_min();
            1.0 + modes
                .iter()
                .map(|(k, c)| c * scale * C64::new(0.0, k * u).exp())
                .sum::<C64>()
        })
        .collect();
    WaveFunction::from_values(grid.clone(), values)?.normalized()
}
