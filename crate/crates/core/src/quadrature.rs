use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::{max_abs, ComplexField};
use crate::grid::{Boundary, Grid};

/// Relative tolerance of the single-valuedness test on periodic grids.
pub const PERIODICITY_TOLERANCE: f64 = 1e-9;

/// Where the antiderivative is pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    #[default]
    LeftEdge,
}

/// Fourth-order cell rule on box grids (the end value of
/// [`cumulative_integral`]), rectangle rule on periodic grids.
pub fn integrate(f: &ComplexField) -> C64 {
    let grid = f.grid();
    match grid.boundary() {
        Boundary::Periodic => integrate_values(grid, f.values()),
        Boundary::Box => cumulative_box(f.values(), grid.dx())[f.len() - 1],
    }
}

/// Discrete inner-product weights: trapezoid on box grids, rectangle rule on
/// periodic grids.
pub(crate) fn integrate_values(grid: &Grid, v: &[C64]) -> C64 {
    let sum: C64 = v.iter().sum();
    match grid.boundary() {
        Boundary::Periodic => sum * grid.dx(),
        Boundary::Box => (sum - 0.5 * (v[0] + v[v.len() - 1])) * grid.dx(),
    }
}

/// `F(x) = ∫_{x_min}^{x} f`, with `F(x_min) = 0`.
///
/// Box grids integrate the local cubic interpolant over each cell (fourth
/// order, exact for cubics). Periodic grids integrate in Fourier space and
/// require the total integral to vanish.
pub fn cumulative_integral(f: &ComplexField, anchor: Anchor) -> Result<ComplexField> {
    cumulative_integral_with_tolerance(f, anchor, PERIODICITY_TOLERANCE)
}

pub fn cumulative_integral_with_tolerance(f: &ComplexField, anchor: Anchor, tolerance: f64) -> Result<ComplexField> {
    let Anchor::LeftEdge = anchor;
    let values = cumulative_values(f.grid(), f.values(), tolerance)?;
    ComplexField::new(f.grid().clone(), values)
}

pub(crate) fn cumulative_values(grid: &Grid, v: &[C64], tolerance: f64) -> Result<Vec<C64>> {
    match grid.boundary() {
        Boundary::Box => Ok(cumulative_box(v, grid.dx())),
        Boundary::Periodic => {
            let total = integrate_values(grid, v);
            let limit = tolerance * grid.length() * max_abs(v);
            if total.norm() > limit {
                return Err(Error::PeriodicityViolation {
                    integral: total.norm(),
                    limit,
                });
            }
            Ok(cumulative_spectral(grid, v, total))
        }
    }
}

/// `∫ p` for a momentum field. On periodic grids the total may be a whole
/// number of turns `2πm`, since `exp(i∫p)` is then still single-valued.
pub(crate) fn cumulative_phase_values(grid: &Grid, v: &[C64], tolerance: f64) -> Result<Vec<C64>> {
    match grid.boundary() {
        Boundary::Box => Ok(cumulative_box(v, grid.dx())),
        Boundary::Periodic => {
            let total = integrate_values(grid, v);
            let turns = (total.re / std::f64::consts::TAU).round();
            let excess = total - std::f64::consts::TAU * turns;
            let limit = tolerance * grid.length() * max_abs(v);
            if excess.norm() > limit {
                return Err(Error::PeriodicityViolation {
                    integral: excess.norm(),
                    limit,
                });
            }
            Ok(cumulative_spectral(grid, v, total))
        }
    }
}

fn cumulative_box(v: &[C64], dx: f64) -> Vec<C64> {
    let n = v.len();
    let w = dx / 24.0;
    let mut out = Vec::with_capacity(n);
    let mut acc = C64::new(0.0, 0.0);
    out.push(acc);
    for j in 0..n - 1 {
        let cell = if j == 0 {
            9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3]
        } else if j == n - 2 {
            v[n - 4] - 5.0 * v[n - 3] + 19.0 * v[n - 2] + 9.0 * v[n - 1]
        } else {
            -v[j - 1] + 13.0 * v[j] + 13.0 * v[j + 1] - v[j + 2]
        };
        acc += cell * w;
        out.push(acc);
    }
    out
}

fn cumulative_spectral(grid: &Grid, v: &[C64], total: C64) -> Vec<C64> {
    let n = v.len();
    let fft = grid.fft();
    let mut buf = v.to_vec();
    fft.forward.process(&mut buf);
    let ks = grid.wavenumbers();
    let nyquist = n.is_multiple_of(2).then_some(n / 2);
    for (j, (b, &k)) in buf.iter_mut().zip(&ks).enumerate() {
        if j == 0 || Some(j) == nyquist {
            *b = C64::new(0.0, 0.0);
        } else {
            *b /= C64::new(0.0, k);
        }
    }
    fft.inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    let origin = buf[0] * scale;
    let mean = total / grid.length();
    buf.iter()
        .enumerate()
        .map(|(j, b)| b * scale - origin + mean * (grid.x(j) - grid.x_min()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::gradient;
    use crate::grid::DerivativeScheme;
    use std::f64::consts::PI;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn integrates_constants_and_full_periods() {
        let l = 3.0;
        for g in [Grid::periodic(0.0, l, 64).unwrap(), Grid::boxed(0.0, l, 64).unwrap()] {
            let one = ComplexField::from_fn(g, |_| re(1.0)).unwrap();
            assert!((integrate(&one) - re(l)).norm() <= 1e-12);
        }
        let g = Grid::periodic(0.0, l, 64).unwrap();
        let s = ComplexField::from_fn(g, |x| re((2.0 * PI * x / l).sin())).unwrap();
        assert!(integrate(&s).norm() <= 1e-12);
    }

    #[test]
    fn gaussian_integral() {
        let g = Grid::boxed(-10.0, 10.0, 401).unwrap();
        let f = ComplexField::from_fn(g, |x| re((-x * x).exp())).unwrap();
        assert!((integrate(&f).re - PI.sqrt()).abs() <= 1e-10);
    }

    #[test]
    fn cumulative_of_one_and_of_x() {
        let g = Grid::boxed(-2.0, 5.0, 50).unwrap();
        let one = ComplexField::from_fn(g.clone(), |_| re(1.0)).unwrap();
        let f = cumulative_integral(&one, Anchor::LeftEdge).unwrap();
        for (j, v) in f.values().iter().enumerate() {
            assert!((v.re - (g.x(j) + 2.0)).abs() <= 1e-12);
        }
        let g = Grid::boxed(0.0, 1.0, 33).unwrap();
        let x = ComplexField::from_fn(g.clone(), re).unwrap();
        let f = cumulative_integral(&x, Anchor::LeftEdge).unwrap();
        for (j, v) in f.values().iter().enumerate() {
            assert!((v.re - g.x(j).powi(2) / 2.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn cumulative_cosine_on_periodic_grid() {
        let g = Grid::periodic(0.0, 2.0 * PI, 64).unwrap();
        let c = ComplexField::from_fn(g.clone(), |x| re(x.cos())).unwrap();
        let f = cumulative_integral(&c, Anchor::LeftEdge).unwrap();
        for (j, v) in f.values().iter().enumerate() {
            assert!((v - re(g.x(j).sin())).norm() <= 1e-10);
        }
    }

    #[test]
    fn periodic_violation_is_flagged() {
        let g = Grid::periodic(0.0, 1.0, 32).unwrap();
        let one = ComplexField::from_fn(g, |_| re(1.0)).unwrap();
        assert!(matches!(
            cumulative_integral(&one, Anchor::LeftEdge),
            Err(Error::PeriodicityViolation { .. })
        ));
    }

    #[test]
    fn gradient_inverts_cumulative_integral() {
        let g = Grid::boxed(-6.0, 6.0, 256).unwrap();
        let f = ComplexField::from_fn(g, |x| C64::new((-x * x / 3.0).exp(), x.sin() * 0.3)).unwrap();
        let big = cumulative_integral(&f, Anchor::LeftEdge).unwrap();
        let back = gradient(&big, DerivativeScheme::CentralDifference4).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() <= 1e-6);
    }
}
