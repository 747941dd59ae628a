use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ensure_same, Grid};

pub type C64 = Complex64;

/// Complex samples on a grid. Entries are finite.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<C64>,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![C64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> C64) -> Result<Self> {
        let values = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        Self::new(grid, values)
    }

    pub fn from_real(grid: Arc<Grid>, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn scaled(&self, c: C64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * c).collect())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        ensure_same(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest pointwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        ensure_same(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Samples `start..start + len` on the corresponding window grid.
    pub fn restrict(&self, start: usize, len: usize) -> Result<Self> {
        let grid = self.grid.window(start, len)?;
        Self::new(grid, self.values[start..start + len].to_vec())
    }

    /// Same samples reinterpreted on another grid with identical node
    /// coordinates.
    pub fn on_grid(&self, grid: Arc<Grid>) -> Result<Self> {
        if grid.len() != self.grid.len()
            || (0..grid.len()).any(|j| (grid.x(j) - self.grid.x(j)).abs() > 1e-9 * grid.length())
        {
            return Err(Error::GridMismatch);
        }
        Self::new(grid, self.values.clone())
    }
}

pub(crate) fn max_abs(values: &[C64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let g = Grid::periodic(0.0, 1.0, 16).unwrap();
        let mut v = vec![C64::new(1.0, 0.0); 16];
        v[3] = C64::new(f64::NAN, 0.0);
        assert_eq!(
            ComplexField::new(g.clone(), v).unwrap_err(),
            Error::NonFinite("field samples")
        );
        assert!(ComplexField::new(g, vec![C64::new(0.0, 0.0); 8]).is_err());
    }

    #[test]
    fn cross_grid_arithmetic_is_rejected() {
        let a = ComplexField::zeros(Grid::periodic(0.0, 1.0, 16).unwrap());
        let b = ComplexField::zeros(Grid::periodic(0.0, 2.0, 16).unwrap());
        assert_eq!(a.add(&b).unwrap_err(), Error::GridMismatch);
        let c = ComplexField::zeros(Grid::periodic(0.0, 1.0, 16).unwrap());
        assert!(a.add(&c).is_ok());
    }
}
