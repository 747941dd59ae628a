//! The complex momentum field `p = (ħ/i) ∇ψ/ψ` and the closed evolution
//! equation it obeys.
//!
//! With ħ = m = 1:
//!
//! ```text
//! p_t = −∇V − ½∇(p²) + (i/2)∇(∇p) = −∇H,    H = V + p²/2 − (i/2)∇p
//! ```
//!
//! `p` diverges at zeros of ψ. Samples where `|ψ| < ε_node·max|ψ|` are masked
//! and never evaluated; derivatives of masked fields are taken run by run (see
//! [`crate::diff`]).

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::diff::{d1, d2, masked_derivative};
use crate::error::{Error, Result};
use crate::field::{max_abs, ComplexField};
use crate::grid::{ensure_same, DerivativeScheme, Grid};
use crate::potential::Potential;
use crate::quadrature::{cumulative_phase_values, PERIODICITY_TOLERANCE};
use crate::wavefunction::WaveFunction;

/// Default node threshold `ε_node`.
pub const NODE_THRESHOLD: f64 = 1e-6;

const I: C64 = C64::new(0.0, 1.0);

/// Complex momentum field with its node mask.
///
/// When built from a wave function the field also carries its slope
/// `∂p/∂x = −i(ψ''/ψ + p²)`, which stays accurate next to nodes where
/// differencing `p` itself does not.
#[derive(Debug, Clone)]
pub struct MomentumField {
    values: ComplexField,
    node_mask: Vec<bool>,
    slope: Option<Vec<C64>>,
}

impl MomentumField {
    /// Nodeless field from raw samples.
    pub fn new(values: ComplexField) -> Self {
        let n = values.len();
        Self {
            values,
            node_mask: vec![false; n],
            slope: None,
        }
    }

    pub fn with_mask(values: ComplexField, node_mask: Vec<bool>) -> Result<Self> {
        if node_mask.len() != values.len() {
            return Err(Error::InvalidArgument("mask length".into()));
        }
        Ok(Self {
            values,
            node_mask,
            slope: None,
        })
    }

    pub fn field(&self) -> &ComplexField {
        &self.values
    }

    pub fn values(&self) -> &[C64] {
        self.values.values()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    pub fn node_mask(&self) -> &[bool] {
        &self.node_mask
    }

    pub fn masked_count(&self) -> usize {
        self.node_mask.iter().filter(|&&m| m).count()
    }

    pub fn is_nodeless(&self) -> bool {
        self.masked_count() == 0
    }

    pub fn slope(&self) -> Option<&[C64]> {
        self.slope.as_deref()
    }

    /// Drops the cached slope so derivatives are taken from `p` alone.
    pub fn without_slope(&self) -> Self {
        Self {
            slope: None,
            ..self.clone()
        }
    }

    /// `Re p`, the classical momentum `∂S/∂x` (zero at masked samples).
    pub fn classical_momentum(&self) -> Vec<f64> {
        self.values().iter().map(|v| v.re).collect()
    }

    /// `Im p = −∂ ln|ψ| / ∂x` (zero at masked samples).
    pub fn osmotic_momentum(&self) -> Vec<f64> {
        self.values().iter().map(|v| v.im).collect()
    }

    /// Longest run of unmasked samples (not wrapping around periodic ends).
    pub fn support(&self) -> Option<Range<usize>> {
        let mut best: Option<Range<usize>> = None;
        let mut start = None;
        for j in 0..=self.node_mask.len() {
            let open = j < self.node_mask.len() && !self.node_mask[j];
            match (open, start) {
                (true, None) => start = Some(j),
                (false, Some(s)) => {
                    if best.as_ref().is_none_or(|b| j - s > b.len()) {
                        best = Some(s..j);
                    }
                    start = None;
                }
                _ => {}
            }
        }
        best
    }

    /// Samples `start..start + len` on the window grid.
    pub fn restrict(&self, start: usize, len: usize) -> Result<Self> {
        Ok(Self {
            values: self.values.restrict(start, len)?,
            node_mask: self.node_mask[start..start + len].to_vec(),
            slope: self.slope.as_ref().map(|s| s[start..start + len].to_vec()),
        })
    }

    /// `∂p/∂x` and the mask it is valid on.
    fn derivative(&self, scheme: DerivativeScheme) -> Result<(Vec<C64>, Vec<bool>)> {
        match &self.slope {
            Some(s) => Ok((s.clone(), self.node_mask.clone())),
            None => masked_derivative(self.grid(), scheme, self.values(), &self.node_mask, 1),
        }
    }
}

/// A field valid only where `mask` is false; masked entries are zero.
#[derive(Debug, Clone)]
pub struct MaskedField {
    pub field: ComplexField,
    pub mask: Vec<bool>,
}

impl MaskedField {
    pub fn values(&self) -> &[C64] {
        self.field.values()
    }

    fn unmasked(&self) -> impl Iterator<Item = C64> + '_ {
        self.values()
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| !m)
            .map(|(v, _)| *v)
    }

    pub fn unmasked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| !m).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.unmasked().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Plain average over unmasked samples.
    pub fn mean(&self) -> C64 {
        let n = self.unmasked_count().max(1) as f64;
        self.unmasked().sum::<C64>() / n
    }

    /// Root-mean-square deviation from [`Self::mean`] over unmasked samples.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let n = self.unmasked_count().max(1) as f64;
        (self.unmasked().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n).sqrt()
    }

    /// Mean and spread weighted by `weights` (e.g. a density).
    pub fn weighted_mean_std(&self, weights: &[f64]) -> (C64, f64) {
        let mut wsum = 0.0;
        let mut acc = C64::new(0.0, 0.0);
        for ((v, &m), &w) in self.values().iter().zip(&self.mask).zip(weights) {
            if !m {
                wsum += w;
                acc += w * v;
            }
        }
        if wsum == 0.0 {
            return (C64::new(f64::NAN, f64::NAN), f64::NAN);
        }
        let mean = acc / wsum;
        let var: f64 = self
            .values()
            .iter()
            .zip(&self.mask)
            .zip(weights)
            .filter(|((_, &m), _)| !m)
            .map(|((v, _), &w)| w * (v - mean).norm_sqr())
            .sum::<f64>()
            / wsum;
        (mean, var.sqrt())
    }

    /// Largest unmasked distance between two masked fields on the union mask.
    pub fn max_abs_diff(&self, other: &MaskedField) -> Result<f64> {
        ensure_same(self.field.grid(), other.field.grid())?;
        Ok(self
            .values()
            .iter()
            .zip(other.values())
            .zip(self.mask.iter().zip(&other.mask))
            .filter(|(_, (&a, &b))| !a && !b)
            .map(|((x, y), _)| (x - y).norm())
            .fold(0.0, f64::max))
    }
}

/// Time-dependent scale factor `N = exp(log_magnitude + i·phase)` relating a
/// reference wave function to the stored normalized one: `ψ_ref = N ψ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaugeFactor {
    pub log_magnitude: f64,
    pub phase: f64,
}

impl GaugeFactor {
    pub const IDENTITY: GaugeFactor = GaugeFactor {
        log_magnitude: 0.0,
        phase: 0.0,
    };

    pub fn value(&self) -> C64 {
        C64::from_polar(self.log_magnitude.exp(), self.phase)
    }

    /// `N ψ` for a stored `ψ`.
    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        psi.scaled(self.value())
    }
}

pub fn psi_to_p(psi: &WaveFunction, scheme: DerivativeScheme) -> Result<MomentumField> {
    psi_to_p_with_threshold(psi, scheme, NODE_THRESHOLD)
}

/// `p = −i ψ'/ψ` at samples with `|ψ| ≥ threshold·max|ψ|`.
pub fn psi_to_p_with_threshold(psi: &WaveFunction, scheme: DerivativeScheme, threshold: f64) -> Result<MomentumField> {
    psi_to_p_with_mask(psi, scheme, &node_mask(psi, threshold)?)
}

/// Samples with `|ψ| < threshold·max|ψ|` (or exactly zero).
pub fn node_mask(psi: &WaveFunction, threshold: f64) -> Result<Vec<bool>> {
    let v = psi.values();
    let peak = max_abs(v);
    if peak == 0.0 {
        return Err(Error::AllMasked);
    }
    let cut = threshold * peak;
    Ok(v.iter().map(|z| !(z.norm() >= cut) || z.norm() == 0.0).collect())
}

/// `p` of `psi` with a prescribed node mask. Exact zeros are masked as well.
pub fn psi_to_p_with_mask(psi: &WaveFunction, scheme: DerivativeScheme, mask: &[bool]) -> Result<MomentumField> {
    let grid = psi.grid();
    scheme.check(grid)?;
    let v = psi.values();
    if mask.len() != v.len() {
        return Err(Error::InvalidArgument("mask length".into()));
    }
    let mask: Vec<bool> = mask.iter().zip(v).map(|(&m, z)| m || z.norm() == 0.0).collect();
    if mask.iter().all(|&m| m) {
        return Err(Error::AllMasked);
    }
    let dpsi = d1(grid, scheme, v);
    let lap = d2(grid, scheme, v);
    let mut p = vec![C64::new(0.0, 0.0); v.len()];
    let mut slope = vec![C64::new(0.0, 0.0); v.len()];
    for j in 0..v.len() {
        if mask[j] {
            continue;
        }
        let pj = -I * dpsi[j] / v[j];
        p[j] = pj;
        slope[j] = -I * (lap[j] / v[j] + pj * pj);
    }
    if !slope.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("momentum slope"));
    }
    Ok(MomentumField {
        values: ComplexField::new(grid.clone(), p)?,
        node_mask: mask,
        slope: Some(slope),
    })
}

/// Inverts the momentum map: `ψ ∝ exp(i ∫_{x_min}^x p)`, normalized and
/// phased to be real and positive at its peak. The returned factor maps the
/// normalized state back onto `exp(i ∫ p)`.
///
/// Masked tails are set to zero and the integral then starts at the first
/// unmasked sample; masked samples inside the support are nodes.
pub fn p_to_psi(p: &MomentumField) -> Result<(WaveFunction, GaugeFactor)> {
    let grid = p.grid();
    let n = grid.len();
    let masked = p.masked_count();
    // masked tails are allowed; a masked sample between unmasked ones is a node
    let window = if masked == 0 {
        0..n
    } else {
        let s = p.support().ok_or(Error::AllMasked)?;
        if s.len() + masked != n || s.len() < 4 {
            return Err(Error::NodePresent(masked));
        }
        s
    };
    let action = if window.len() == n {
        cumulative_phase_values(grid, p.values(), PERIODICITY_TOLERANCE)?
    } else {
        let sub = grid.window(window.start, window.len())?;
        cumulative_phase_values(&sub, &p.values()[window.clone()], PERIODICITY_TOLERANCE)?
    };
    let log: Vec<C64> = action.iter().map(|s| I * s).collect();
    let (peak, shift) =
        log.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |(bj, bv), (j, l)| {
                if l.re > bv {
                    (j, l.re)
                } else {
                    (bj, bv)
                }
            },
        );
    let phase = log[peak].im;
    let mut raw = vec![C64::new(0.0, 0.0); n];
    for (r, l) in raw[window].iter_mut().zip(&log) {
        *r = (l - shift - I * phase).exp();
    }
    let unit = WaveFunction::from_values(grid.clone(), raw)?;
    let norm = unit.norm();
    let psi = unit.scaled(C64::new(1.0 / norm, 0.0))?;
    Ok((
        psi,
        GaugeFactor {
            log_magnitude: shift + norm.ln(),
            phase,
        },
    ))
}

fn check_potential(p: &MomentumField, potential: &Potential) -> Result<()> {
    ensure_same(p.grid(), potential.grid())
}

/// `H = V + p²/2 − (i/2) ∂p/∂x`.
pub fn quantum_hamiltonian_field(
    p: &MomentumField,
    potential: &Potential,
    scheme: DerivativeScheme,
) -> Result<MaskedField> {
    check_potential(p, potential)?;
    let (dp, mask) = p.derivative(scheme)?;
    let values = hamiltonian_values(p.values(), &dp, potential.samples(), &mask);
    Ok(MaskedField {
        field: ComplexField::new(p.grid().clone(), values)?,
        mask,
    })
}

fn hamiltonian_values(p: &[C64], dp: &[C64], v: &[f64], mask: &[bool]) -> Vec<C64> {
    (0..p.len())
        .map(|j| {
            if mask[j] {
                C64::new(0.0, 0.0)
            } else {
                v[j] + 0.5 * p[j] * p[j] - 0.5 * I * dp[j]
            }
        })
        .collect()
}

/// Right-hand side of the momentum equation in expanded form,
/// `−∇V − ½∇(p²) + (i/2)∇(∇p)`.
pub fn cqhj_rhs(p: &MomentumField, potential: &Potential, scheme: DerivativeScheme) -> Result<MaskedField> {
    check_potential(p, potential)?;
    let (dp, mask) = p.derivative(scheme)?;
    let grid = p.grid();
    let v: Vec<C64> = potential.samples().iter().map(|&x| C64::new(x, 0.0)).collect();
    let p2: Vec<C64> = p.values().iter().map(|z| z * z).collect();
    let (dv, out_mask) = masked_derivative(grid, scheme, &v, &mask, 1)?;
    let (dp2, _) = masked_derivative(grid, scheme, &p2, &mask, 1)?;
    // A direct second difference keeps grid-scale modes moving outward;
    // differencing twice reverses their group velocity.
    let (ddp, _) = match p.slope {
        Some(_) => masked_derivative(grid, scheme, &dp, &mask, 1)?,
        None => masked_derivative(grid, scheme, p.values(), &mask, 2)?,
    };
    let values = (0..v.len())
        .map(|j| {
            if out_mask[j] {
                C64::new(0.0, 0.0)
            } else {
                -dv[j] - 0.5 * dp2[j] + 0.5 * I * ddp[j]
            }
        })
        .collect();
    Ok(MaskedField {
        field: ComplexField::new(grid.clone(), values)?,
        mask: out_mask,
    })
}

/// The same right-hand side in canonical form, `−∇H`.
pub fn cqhj_rhs_canonical(p: &MomentumField, potential: &Potential, scheme: DerivativeScheme) -> Result<MaskedField> {
    let h = quantum_hamiltonian_field(p, potential, scheme)?;
    let (dh, mask) = masked_derivative(p.grid(), scheme, h.values(), &h.mask, 1)?;
    let values = dh
        .iter()
        .zip(&mask)
        .map(|(d, &m)| if m { C64::new(0.0, 0.0) } else { -d })
        .collect();
    Ok(MaskedField {
        field: ComplexField::new(p.grid().clone(), values)?,
        mask,
    })
}

/// `max|expanded − canonical| / max(max|expanded|, 1)`.
pub fn rhs_form_agreement(p: &MomentumField, potential: &Potential, scheme: DerivativeScheme) -> Result<f64> {
    let a = cqhj_rhs(p, potential, scheme)?;
    let b = cqhj_rhs_canonical(p, potential, scheme)?;
    Ok(a.max_abs_diff(&b)? / a.max_abs().max(1.0))
}

/// Max-abs residuals of each step that eliminates ψ in favour of `p`, for a
/// nodeless state normalized to one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DerivationResiduals {
    /// `Δψ − i(ψ ∂p + p ∂ψ)`.
    pub laplacian_identity: f64,
    /// `−p ψ_t/ψ` against its expression in `p`, with `ψ_t` from the
    /// Schrödinger equation.
    pub phase_term: f64,
    /// `−i ∇ψ_t/ψ` against its expression in `p`.
    pub gradient_term: f64,
    /// `p_t = −i ∇(ψ_t/ψ)` against the closed momentum equation.
    pub closed_form: f64,
    /// Relative gap between the expanded and canonical right-hand sides.
    pub form_agreement: f64,
}

impl DerivationResiduals {
    pub fn max_residual(&self) -> f64 {
        self.laplacian_identity
            .max(self.phase_term)
            .max(self.gradient_term)
            .max(self.closed_form)
    }
}

pub fn derivation_residuals(
    psi: &WaveFunction,
    potential: &Potential,
    scheme: DerivativeScheme,
) -> Result<DerivationResiduals> {
    ensure_same(psi.grid(), potential.grid())?;
    let psi = psi.normalized()?;
    let grid = psi.grid().clone();
    let full = psi_to_p(&psi, scheme)?;
    if !full.is_nodeless() {
        return Err(Error::NodePresent(full.masked_count()));
    }
    // differentiate p itself, not through ψ
    let p_field = full.without_slope();
    let p = p_field.values();
    let s = psi.values();
    let v: Vec<C64> = potential.samples().iter().map(|&x| C64::new(x, 0.0)).collect();

    let dpsi = d1(&grid, scheme, s);
    let lap = d2(&grid, scheme, s);
    let dp = d1(&grid, scheme, p);
    let ddp = d1(&grid, scheme, &dp);
    let p2: Vec<C64> = p.iter().map(|z| z * z).collect();
    let dp2 = d1(&grid, scheme, &p2);
    let dv = d1(&grid, scheme, &v);

    let psi_t: Vec<C64> = (0..s.len()).map(|j| -I * (-0.5 * lap[j] + v[j] * s[j])).collect();
    let dpsi_t = d1(&grid, scheme, &psi_t);
    let ratio: Vec<C64> = psi_t.iter().zip(s).map(|(a, b)| a / b).collect();
    let p_t = d1(&grid, scheme, &ratio);

    let rhs = cqhj_rhs(&p_field, potential, scheme)?;

    let mut res = [0.0f64; 4];
    for j in 0..s.len() {
        let p3 = p[j] * p2[j];
        let a = lap[j] - I * (s[j] * dp[j] + p[j] * dpsi[j]);
        let b = -p[j] * psi_t[j] / s[j] - (0.5 * p[j] * dp[j] + 0.5 * I * p3 + I * p[j] * v[j]);
        let c = -I * dpsi_t[j] / s[j]
            - (0.5 * I * ddp[j] - 0.5 * p[j] * dp[j] - 0.5 * dp2[j] - 0.5 * I * p3 - dv[j] - I * p[j] * v[j]);
        let d = -I * p_t[j] - rhs.values()[j];
        for (r, x) in res.iter_mut().zip([a, b, c, d]) {
            *r = r.max(x.norm());
        }
    }
    Ok(DerivationResiduals {
        laplacian_identity: res[0],
        phase_term: res[1],
        gradient_term: res[2],
        closed_form: res[3],
        form_agreement: rhs_form_agreement(&p_field, potential, scheme)?,
    })
}

/// Phase of ψ unwrapped from the left edge: neighbouring samples never differ
/// by more than π.
pub fn unwrapped_phase(psi: &WaveFunction) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let v = psi.values();
    let mut out = Vec::with_capacity(v.len());
    out.push(v[0].arg());
    for w in v.windows(2) {
        let mut step = (w[1] * w[0].conj()).arg();
        if step <= -PI {
            step += TAU;
        }
        out.push(out[out.len() - 1] + step);
    }
    out
}
