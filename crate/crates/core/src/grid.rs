//! Uniform 1-D spatial grids.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// `x_max` is identified with `x_min`; samples at `x_min + j dx`, `j < n`.
    Periodic,
    /// Both endpoints are samples; wave functions vanish there.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    /// Fourier differentiation, periodic grids only.
    Spectral,
    /// Fourth-order central differences with one-sided closures at walls.
    CentralDifference4,
}

impl DerivativeScheme {
    /// Highest-accuracy scheme the boundary admits.
    pub fn natural_for(boundary: Boundary) -> Self {
        match boundary {
            Boundary::Periodic => DerivativeScheme::Spectral,
            Boundary::Box => DerivativeScheme::CentralDifference4,
        }
    }

    pub fn check(self, grid: &Grid) -> Result<()> {
        if self == DerivativeScheme::Spectral && grid.boundary() != Boundary::Periodic {
            return Err(Error::SchemeMismatch);
        }
        Ok(())
    }
}

pub(crate) struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    boundary: Boundary,
    dx: f64,
    fft: OnceLock<FftPair>,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, boundary: Boundary) -> Result<Arc<Self>> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need finite x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        let intervals = match boundary {
            Boundary::Periodic => n_points,
            Boundary::Box => n_points - 1,
        };
        Ok(Arc::new(Self {
            x_min,
            x_max,
            n_points,
            boundary,
            dx: (x_max - x_min) / intervals as f64,
            fft: OnceLock::new(),
        }))
    }

    pub fn periodic(x_min: f64, x_max: f64, n_points: usize) -> Result<Arc<Self>> {
        Self::new(x_min, x_max, n_points, Boundary::Periodic)
    }

    pub fn boxed(x_min: f64, x_max: f64, n_points: usize) -> Result<Arc<Self>> {
        Self::new(x_min, x_max, n_points, Boundary::Box)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order. The Nyquist entry (even `n`) is
    /// negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * std::f64::consts::PI / self.length();
        (0..n)
            .map(|j| {
                let m = if j < n.div_ceil(2) {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
                m as f64 * dk
            })
            .collect()
    }

    /// Box grid through samples `start..start + len` of this grid.
    pub fn window(&self, start: usize, len: usize) -> Result<Arc<Self>> {
        if start + len > self.n_points {
            return Err(Error::InvalidGrid(format!(
                "window {start}..{} exceeds {} points",
                start + len,
                self.n_points
            )));
        }
        Self::boxed(self.x(start), self.x(start + len - 1), len)
    }

    pub(crate) fn fft(&self) -> &FftPair {
        self.fft.get_or_init(|| {
            let mut planner = FftPlanner::new();
            FftPair {
                forward: planner.plan_fft_forward(self.n_points),
                inverse: planner.plan_fft_inverse(self.n_points),
            }
        })
    }

    /// Grids compare by geometry; two separately built identical grids are
    /// the same grid.
    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.n_points == other.n_points
            && self.boundary == other.boundary
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("x_min", &self.x_min)
            .field("x_max", &self.x_max)
            .field("n_points", &self.n_points)
            .field("boundary", &self.boundary)
            .field("dx", &self.dx)
            .finish()
    }
}

pub(crate) fn ensure_same(a: &Grid, b: &Grid) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}
