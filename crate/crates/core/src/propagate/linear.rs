//! Steppers for the linear Schrödinger equation `i ψ_t = H₀ ψ`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Boundary;
use crate::hamiltonian::Hamiltonian;
use crate::linalg::{BandedLu, DenseLu};

use super::Method;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone)]
enum Kernel {
    /// Strang split: half potential kick, kinetic drift in Fourier space,
    /// half kick.
    Split {
        half_kick: Vec<C64>,
        drift: Vec<C64>,
    },
    /// Cayley form `(1 + iτH) ψ' = (1 − iτH) ψ`, τ = dt/2.
    CrankNicolsonBanded {
        lu: BandedLu,
    },
    CrankNicolsonDense {
        lu: DenseLu,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct LinearStepper {
    ham: Hamiltonian,
    dt: f64,
    kernel: Kernel,
}

impl LinearStepper {
    pub fn new(ham: &Hamiltonian, method: Method, dt: f64) -> Result<Self> {
        let grid = ham.grid().clone();
        let kernel = match method {
            Method::SplitStep => {
                if grid.boundary() != Boundary::Periodic {
                    return Err(Error::InvalidArgument(
                        "split-step propagation needs a periodic grid".into(),
                    ));
                }
                Kernel::Split {
                    half_kick: ham.potential().iter().map(|&v| (-I * v * dt / 2.0).exp()).collect(),
                    drift: grid
                        .wavenumbers()
                        .into_iter()
                        .map(|k| (-I * k * k * dt / 2.0).exp())
                        .collect(),
                }
            }
            Method::CrankNicolson => {
                let tau = dt / 2.0;
                match grid.boundary() {
                    Boundary::Box => {
                        let n = grid.len();
                        let (d0, d1, d2) = ham.kinetic_bands();
                        let shift = ham.reflection_shift();
                        let v = ham.potential();
                        let m = n - 2;
                        let lu = BandedLu::factor(m, 2, 2, |a, b| {
                            let h = match a.abs_diff(b) {
                                0 => {
                                    let j = a + 1;
                                    let edge = if a == 0 || a == m - 1 { shift } else { 0.0 };
                                    d0 + v[j] + edge
                                }
                                1 => d1,
                                _ => d2,
                            };
                            let one = if a == b { 1.0 } else { 0.0 };
                            C64::new(one, tau * h)
                        });
                        Kernel::CrankNicolsonBanded { lu }
                    }
                    Boundary::Periodic => {
                        let h = ham.dense();
                        let m = h.nrows();
                        let a = DMatrix::from_fn(m, m, |r, c| {
                            let one = if r == c { 1.0 } else { 0.0 };
                            C64::new(one, tau * h[(r, c)])
                        });
                        Kernel::CrankNicolsonDense { lu: DenseLu::factor(a) }
                    }
                }
            }
            Method::RungeKutta4 => {
                return Err(Error::InvalidArgument(
                    "Runge-Kutta integration applies to momentum fields only".into(),
                ))
            }
        };
        Ok(Self {
            ham: ham.clone(),
            dt,
            kernel,
        })
    }

    pub fn step(&self, psi: &mut [C64]) -> Result<()> {
        match &self.kernel {
            Kernel::Split { half_kick, drift } => {
                let fft = self.ham.grid().fft();
                psi.iter_mut().zip(half_kick).for_each(|(p, k)| *p *= k);
                fft.forward.process(psi);
                let scale = 1.0 / psi.len() as f64;
                psi.iter_mut().zip(drift).for_each(|(p, d)| *p *= d * scale);
                fft.inverse.process(psi);
                psi.iter_mut().zip(half_kick).for_each(|(p, k)| *p *= k);
            }
            Kernel::CrankNicolsonBanded { lu } => {
                let tau = self.dt / 2.0;
                let hpsi = self.ham.apply(psi);
                let n = psi.len();
                let mut rhs: Vec<C64> = (1..n - 1).map(|j| psi[j] - I * tau * hpsi[j]).collect();
                lu.solve_in_place(&mut rhs);
                psi[1..n - 1].copy_from_slice(&rhs);
                psi[0] = C64::new(0.0, 0.0);
                psi[n - 1] = C64::new(0.0, 0.0);
            }
            Kernel::CrankNicolsonDense { lu } => {
                let tau = self.dt / 2.0;
                let hpsi = self.ham.apply(psi);
                let mut rhs: Vec<C64> = psi.iter().zip(&hpsi).map(|(p, h)| p - I * tau * h).collect();
                if !lu.solve_in_place(&mut rhs) {
                    return Err(Error::StabilityViolation("singular Crank-Nicolson matrix".into()));
                }
                psi.copy_from_slice(&rhs);
            }
        }
        if !psi.iter().all(|p| p.is_finite()) {
            return Err(Error::StabilityViolation("non-finite wave function".into()));
        }
        Ok(())
    }
}
