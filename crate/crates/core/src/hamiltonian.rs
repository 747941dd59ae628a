//! The discretized linear Hamiltonian `H₀ = −½Δ + V`.
//!
//! Periodic grids use the Fourier Laplacian. Box grids use the fourth-order
//! five-point Laplacian on the interior samples with ψ = 0 on the walls and an
//! odd reflection across each wall, which keeps the matrix symmetric.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::diff::spectral;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::potential::Potential;

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: Arc<Grid>,
    potential: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(potential: &Potential) -> Self {
        Self {
            grid: potential.grid().clone(),
            potential: potential.samples().to_vec(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Samples the operator acts on; wall samples of box grids are pinned to
    /// zero.
    pub fn active(&self) -> std::ops::Range<usize> {
        match self.grid.boundary() {
            Boundary::Periodic => 0..self.grid.len(),
            Boundary::Box => 1..self.grid.len() - 1,
        }
    }

    /// `H₀ ψ` on every sample (zero on box walls).
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let n = self.grid.len();
        match self.grid.boundary() {
            Boundary::Periodic => {
                let lap = spectral(&self.grid, psi, 2);
                (0..n).map(|j| -0.5 * lap[j] + self.potential[j] * psi[j]).collect()
            }
            Boundary::Box => {
                let mut out = vec![C64::new(0.0, 0.0); n];
                let (d0, d1, d2) = self.kinetic_bands();
                let inner = |j: usize| -> C64 {
                    if j == 0 || j >= n - 1 {
                        C64::new(0.0, 0.0)
                    } else {
                        psi[j]
                    }
                };
                for j in 1..n - 1 {
                    let mut diag = d0 + self.potential[j];
                    if j == 1 || j == n - 2 {
                        diag += self.reflection_shift();
                    }
                    let mut acc = diag * inner(j);
                    acc += d1 * (inner(j - 1) + inner(j + 1));
                    if j >= 2 {
                        acc += d2 * inner(j - 2);
                    }
                    if j + 2 < n {
                        acc += d2 * inner(j + 2);
                    }
                    out[j] = acc;
                }
                out
            }
        }
    }

    /// Kinetic stencil of the box operator: diagonal, first and second
    /// off-diagonals.
    pub(crate) fn kinetic_bands(&self) -> (f64, f64, f64) {
        let h = 1.0 / (24.0 * self.grid.dx() * self.grid.dx());
        (30.0 * h, -16.0 * h, h)
    }

    /// Odd reflection across a wall: the ghost sample equals minus the first
    /// interior one, which moves `−½·(−1)/(12 dx²)` weight onto the diagonal.
    pub(crate) fn reflection_shift(&self) -> f64 {
        -1.0 / (24.0 * self.grid.dx() * self.grid.dx())
    }

    /// Real symmetric matrix on the active samples.
    pub fn dense(&self) -> DMatrix<f64> {
        let active = self.active();
        let m = active.len();
        let n = self.grid.len();
        let mut h = DMatrix::<f64>::zeros(m, m);
        match self.grid.boundary() {
            Boundary::Box => {
                let (d0, d1, d2) = self.kinetic_bands();
                for a in 0..m {
                    let j = a + 1;
                    let mut diag = d0 + self.potential[j];
                    if j == 1 || j == n - 2 {
                        diag += self.reflection_shift();
                    }
                    h[(a, a)] = diag;
                    if a + 1 < m {
                        h[(a, a + 1)] = d1;
                        h[(a + 1, a)] = d1;
                    }
                    if a + 2 < m {
                        h[(a, a + 2)] = d2;
                        h[(a + 2, a)] = d2;
                    }
                }
            }
            Boundary::Periodic => {
                let mut unit = vec![C64::new(0.0, 0.0); n];
                for c in 0..n {
                    unit[c] = C64::new(1.0, 0.0);
                    let col = self.apply(&unit);
                    unit[c] = C64::new(0.0, 0.0);
                    for r in 0..n {
                        h[(r, c)] = col[r].re;
                    }
                }
                let t = h.transpose();
                h = (h + t) * 0.5;
            }
        }
        h
    }

    /// `⟨ψ|H₀|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, psi: &[C64]) -> Result<f64> {
        let hpsi = self.apply(psi);
        let num: C64 = psi.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if den == 0.0 {
            return Err(Error::ZeroState);
        }
        let e = num / den;
        if e.im.abs() > 1e-10 * e.re.abs().max(1.0) {
            return Err(Error::NonHermitian(e.im));
        }
        Ok(e.re)
    }

    /// Energy spread `sqrt(⟨H₀²⟩ − ⟨H₀⟩²)`.
    pub fn spread(&self, psi: &[C64]) -> Result<f64> {
        let hpsi = self.apply(psi);
        let den: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if den == 0.0 {
            return Err(Error::ZeroState);
        }
        let mean: C64 = psi.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum::<C64>() / den;
        let second: f64 = hpsi.iter().map(|b| b.norm_sqr()).sum::<f64>() / den;
        Ok((second - mean.re * mean.re).max(0.0).sqrt())
    }
}
