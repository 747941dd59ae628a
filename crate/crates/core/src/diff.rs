//! Differential operators on grid fields.
//!
//! Fourier differentiation on periodic grids and fourth-order central
//! differences elsewhere. Box grids close the stencils with one-sided
//! fourth-order formulas, so polynomials up to degree four are differentiated
//! exactly at every sample.
//!
//! Fields that are only defined away from masked points (momentum fields near
//! nodes) are differentiated segment by segment with the open fourth-order
//! stencils; spectral differentiation across a hole would smear the hole
//! over the whole domain.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Boundary, DerivativeScheme, Grid};

/// Shortest unmasked run that supports the open second-derivative closure.
pub const MIN_SEGMENT: usize = 6;

pub fn gradient(f: &ComplexField, scheme: DerivativeScheme) -> Result<ComplexField> {
    scheme.check(f.grid())?;
    ComplexField::new(f.grid().clone(), d1(f.grid(), scheme, f.values()))
}

pub fn laplacian(f: &ComplexField, scheme: DerivativeScheme) -> Result<ComplexField> {
    scheme.check(f.grid())?;
    ComplexField::new(f.grid().clone(), d2(f.grid(), scheme, f.values()))
}

pub(crate) fn d1(grid: &Grid, scheme: DerivativeScheme, v: &[C64]) -> Vec<C64> {
    match (scheme, grid.boundary()) {
        (DerivativeScheme::Spectral, _) => spectral(grid, v, 1),
        (DerivativeScheme::CentralDifference4, Boundary::Periodic) => cd4_d1_periodic(v, grid.dx()),
        (DerivativeScheme::CentralDifference4, Boundary::Box) => cd4_d1_open(v, grid.dx()),
    }
}

pub(crate) fn d2(grid: &Grid, scheme: DerivativeScheme, v: &[C64]) -> Vec<C64> {
    match (scheme, grid.boundary()) {
        (DerivativeScheme::Spectral, _) => spectral(grid, v, 2),
        (DerivativeScheme::CentralDifference4, Boundary::Periodic) => cd4_d2_periodic(v, grid.dx()),
        (DerivativeScheme::CentralDifference4, Boundary::Box) => cd4_d2_open(v, grid.dx()),
    }
}

/// `(i k)^order` multiplier in Fourier space. The Nyquist mode of odd
/// derivatives is dropped so real input stays real.
pub(crate) fn spectral(grid: &Grid, v: &[C64], order: u32) -> Vec<C64> {
    let n = v.len();
    let fft = grid.fft();
    let mut buf = v.to_vec();
    fft.forward.process(&mut buf);
    let ks = grid.wavenumbers();
    let nyquist = n.is_multiple_of(2).then_some(n / 2);
    for (j, (b, &k)) in buf.iter_mut().zip(&ks).enumerate() {
        if order % 2 == 1 && Some(j) == nyquist {
            *b = C64::new(0.0, 0.0);
            continue;
        }
        *b *= C64::new(0.0, k).powu(order);
    }
    fft.inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|b| *b *= scale);
    buf
}

fn cd4_d1_periodic(v: &[C64], dx: f64) -> Vec<C64> {
    let n = v.len();
    let h = 1.0 / (12.0 * dx);
    (0..n)
        .map(|j| {
            let at = |o: isize| v[(j as isize + o).rem_euclid(n as isize) as usize];
            (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) * h
        })
        .collect()
}

fn cd4_d2_periodic(v: &[C64], dx: f64) -> Vec<C64> {
    let n = v.len();
    let h = 1.0 / (12.0 * dx * dx);
    (0..n)
        .map(|j| {
            let at = |o: isize| v[(j as isize + o).rem_euclid(n as isize) as usize];
            (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) * h
        })
        .collect()
}

/// Needs at least 5 samples.
pub(crate) fn cd4_d1_open(v: &[C64], dx: f64) -> Vec<C64> {
    let n = v.len();
    debug_assert!(n >= 5);
    let h = 1.0 / (12.0 * dx);
    let mut out = vec![C64::new(0.0, 0.0); n];
    out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) * h;
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) * h;
    for j in 2..n - 2 {
        out[j] = (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) * h;
    }
    let m = n - 1;
    out[m - 1] = (3.0 * v[m] + 10.0 * v[m - 1] - 18.0 * v[m - 2] + 6.0 * v[m - 3] - v[m - 4]) * h;
    out[m] = (25.0 * v[m] - 48.0 * v[m - 1] + 36.0 * v[m - 2] - 16.0 * v[m - 3] + 3.0 * v[m - 4]) * h;
    out
}

/// Needs at least 6 samples.
pub(crate) fn cd4_d2_open(v: &[C64], dx: f64) -> Vec<C64> {
    let n = v.len();
    debug_assert!(n >= MIN_SEGMENT);
    let h = 1.0 / (12.0 * dx * dx);
    let mut out = vec![C64::new(0.0, 0.0); n];
    out[0] = (45.0 * v[0] - 154.0 * v[1] + 214.0 * v[2] - 156.0 * v[3] + 61.0 * v[4] - 10.0 * v[5]) * h;
    out[1] = (10.0 * v[0] - 15.0 * v[1] - 4.0 * v[2] + 14.0 * v[3] - 6.0 * v[4] + v[5]) * h;
    for j in 2..n - 2 {
        out[j] = (-v[j - 2] + 16.0 * v[j - 1] - 30.0 * v[j] + 16.0 * v[j + 1] - v[j + 2]) * h;
    }
    let m = n - 1;
    out[m - 1] = (10.0 * v[m] - 15.0 * v[m - 1] - 4.0 * v[m - 2] + 14.0 * v[m - 3] - 6.0 * v[m - 4] + v[m - 5]) * h;
    out[m] =
        (45.0 * v[m] - 154.0 * v[m - 1] + 214.0 * v[m - 2] - 156.0 * v[m - 3] + 61.0 * v[m - 4] - 10.0 * v[m - 5]) * h;
    out
}

/// Unmasked runs as index lists. On periodic grids a run may wrap around the
/// end of the array.
pub(crate) fn segments(boundary: Boundary, mask: &[bool]) -> Vec<Vec<usize>> {
    let n = mask.len();
    let Some(first_masked) = mask.iter().position(|&m| m) else {
        return vec![(0..n).collect()];
    };
    let (start, span) = match boundary {
        Boundary::Periodic => (first_masked, n),
        Boundary::Box => (0, n),
    };
    let mut out = Vec::new();
    let mut current = Vec::new();
    for step in 0..span {
        let j = (start + step) % n;
        if mask[j] {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else {
            current.push(j);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Derivative of a field defined only on unmasked points.
///
/// With an empty mask this is the plain scheme derivative. Otherwise every
/// unmasked run is differentiated with open fourth-order stencils; runs too
/// short for the stencil are added to the returned mask. Masked entries of the
/// result are zero.
pub(crate) fn masked_derivative(
    grid: &Grid,
    scheme: DerivativeScheme,
    v: &[C64],
    mask: &[bool],
    order: u32,
) -> Result<(Vec<C64>, Vec<bool>)> {
    scheme.check(grid)?;
    if !mask.iter().any(|&m| m) {
        let d = match order {
            1 => d1(grid, scheme, v),
            2 => d2(grid, scheme, v),
            _ => return Err(Error::InvalidArgument(format!("derivative order {order}"))),
        };
        return Ok((d, mask.to_vec()));
    }
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    let mut out_mask = mask.to_vec();
    for seg in segments(grid.boundary(), mask) {
        if seg.len() < MIN_SEGMENT {
            seg.iter().for_each(|&j| out_mask[j] = true);
            continue;
        }
        let local: Vec<C64> = seg.iter().map(|&j| v[j]).collect();
        let d = match order {
            1 => cd4_d1_open(&local, grid.dx()),
            2 => cd4_d2_open(&local, grid.dx()),
            _ => return Err(Error::InvalidArgument(format!("derivative order {order}"))),
        };
        seg.iter().zip(d).for_each(|(&j, dj)| out[j] = dj);
    }
    Ok((out, out_mask))
}
