use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{ensure_same, Grid};
use crate::quadrature::integrate_values;

/// A (not necessarily normalized) wave function on a grid.
#[derive(Debug, Clone)]
pub struct WaveFunction(ComplexField);

impl WaveFunction {
    pub fn new(field: ComplexField) -> Self {
        Self(field)
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<C64>) -> Result<Self> {
        ComplexField::new(grid, values).map(Self)
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> C64) -> Result<Self> {
        ComplexField::from_fn(grid, f).map(Self)
    }

    pub fn field(&self) -> &ComplexField {
        &self.0
    }

    pub fn into_field(self) -> ComplexField {
        self.0
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.0.grid()
    }

    pub fn values(&self) -> &[C64] {
        self.0.values()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        ensure_same(self.grid(), other.grid())?;
        let prod: Vec<C64> = self
            .values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| a.conj() * b)
            .collect();
        Ok(integrate_values(self.grid(), &prod))
    }

    pub fn norm(&self) -> f64 {
        let dens: Vec<C64> = self.values().iter().map(|a| C64::new(a.norm_sqr(), 0.0)).collect();
        integrate_values(self.grid(), &dens).re.sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(Self(self.0.scaled(C64::new(1.0 / n, 0.0))?))
    }

    pub fn scaled(&self, c: C64) -> Result<Self> {
        Ok(Self(self.0.scaled(c)?))
    }

    /// `|ψ|²` normalized to unit integral.
    pub fn normalized_density(&self) -> Result<Vec<f64>> {
        let n2 = self.norm().powi(2);
        if n2 == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(self.values().iter().map(|a| a.norm_sqr() / n2).collect())
    }

    pub fn expectation_x(&self) -> Result<f64> {
        let dens = self.normalized_density()?;
        let xd: Vec<C64> = dens
            .iter()
            .enumerate()
            .map(|(j, d)| C64::new(d * self.grid().x(j), 0.0))
            .collect();
        Ok(integrate_values(self.grid(), &xd).re)
    }

    pub fn position_variance(&self) -> Result<f64> {
        let mean = self.expectation_x()?;
        let dens = self.normalized_density()?;
        let v: Vec<C64> = dens
            .iter()
            .enumerate()
            .map(|(j, d)| C64::new(d * (self.grid().x(j) - mean).powi(2), 0.0))
            .collect();
        Ok(integrate_values(self.grid(), &v).re)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

impl From<ComplexField> for WaveFunction {
    fn from(f: ComplexField) -> Self {
        Self(f)
    }
}
