use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Boundary, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Free,
    /// `½ ω² x²`.
    Harmonic {
        omega: f64,
    },
    /// Zero inside; the walls are the ends of a box grid.
    Box,
    /// `a (x² − b²)²`.
    DoubleWell {
        a: f64,
        b: f64,
    },
    Custom,
}

/// Real external potential sampled on a grid (units with ħ = m = 1).
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    grid: Arc<Grid>,
    samples: Vec<f64>,
}

impl Potential {
    pub fn free(grid: Arc<Grid>) -> Self {
        Self::analytic(PotentialKind::Free, grid).expect("free potential is always valid")
    }

    pub fn harmonic(grid: Arc<Grid>, omega: f64) -> Result<Self> {
        Self::analytic(PotentialKind::Harmonic { omega }, grid)
    }

    pub fn box_well(grid: Arc<Grid>) -> Result<Self> {
        Self::analytic(PotentialKind::Box, grid)
    }

    pub fn double_well(grid: Arc<Grid>, a: f64, b: f64) -> Result<Self> {
        Self::analytic(PotentialKind::DoubleWell { a, b }, grid)
    }

    pub fn custom(grid: Arc<Grid>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} potential samples for a {}-point grid",
                samples.len(),
                grid.len()
            )));
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("potential samples"));
        }
        Ok(Self {
            kind: PotentialKind::Custom,
            grid,
            samples,
        })
    }

    /// Samples an analytic kind on `grid`.
    pub fn analytic(kind: PotentialKind, grid: Arc<Grid>) -> Result<Self> {
        let eval: Box<dyn Fn(f64) -> f64> = match kind {
            PotentialKind::Free => Box::new(|_| 0.0),
            PotentialKind::Harmonic { omega } => {
                if !(omega.is_finite() && omega > 0.0) {
                    return Err(Error::InvalidArgument(format!("harmonic omega {omega}")));
                }
                Box::new(move |x| 0.5 * omega * omega * x * x)
            }
            PotentialKind::Box => {
                if grid.boundary() != Boundary::Box {
                    return Err(Error::InvalidArgument("box potential needs a box grid".into()));
                }
                Box::new(|_| 0.0)
            }
            PotentialKind::DoubleWell { a, b } => {
                if !(a.is_finite() && b.is_finite() && a > 0.0) {
                    return Err(Error::InvalidArgument(format!("double well a={a}, b={b}")));
                }
                Box::new(move |x| a * (x * x - b * b).powi(2))
            }
            PotentialKind::Custom => {
                return Err(Error::InvalidArgument("custom potentials need explicit samples".into()))
            }
        };
        let samples: Vec<f64> = grid.coords().into_iter().map(eval).collect();
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("potential samples"));
        }
        Ok(Self { kind, grid, samples })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn as_field(&self) -> ComplexField {
        ComplexField::from_real(self.grid.clone(), &self.samples).expect("potential samples are finite")
    }

    /// Samples `start..start + len` on the window grid.
    pub fn restrict(&self, start: usize, len: usize) -> Result<Self> {
        let grid = self.grid.window(start, len)?;
        Ok(Self {
            kind: self.kind.clone(),
            grid,
            samples: self.samples[start..start + len].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_samples_match_formula() {
        let g = Grid::periodic(-5.0, 5.0, 64).unwrap();
        let v = Potential::harmonic(g.clone(), 2.0).unwrap();
        for (j, s) in v.samples().iter().enumerate() {
            assert_eq!(*s, 0.5 * 4.0 * g.x(j) * g.x(j));
        }
    }

    #[test]
    fn box_kind_needs_walls() {
        let g = Grid::periodic(0.0, 1.0, 32).unwrap();
        assert!(Potential::box_well(g).is_err());
    }

    #[test]
    fn custom_rejects_nan() {
        let g = Grid::boxed(0.0, 1.0, 16).unwrap();
        let mut s = vec![0.0; 16];
        s[2] = f64::INFINITY;
        assert_eq!(
            Potential::custom(g, s).unwrap_err(),
            Error::NonFinite("potential samples")
        );
    }
}
