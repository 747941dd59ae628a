//! Built-in invariant suite at fixed resolutions.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use cqhj_core::diff::{gradient, laplacian};
use cqhj_core::propagate::{restrict_to_support, rk4_max_step};
use cqhj_core::{
    collapse_time, collapsible_evolve, cqhj_evolve, cqhj_rhs, derivation_residuals, fidelity, gaussian_packet,
    ho_eigenstate, p_to_psi, psi_to_p, quantum_hamiltonian_field, random_nodeless, schrodinger_evolve,
    solve_eigenstates, superpose, CollapseForce, ComplexField, DerivativeScheme, EigenPair, Grid, IntegratorSpec,
    Method, NodelessSpec, Potential, Snapshot, Trajectory, WaveFunction, C64,
};
use rayon::prelude::*;

type Result<T> = std::result::Result<T, cqhj_core::Error>;

const SPECTRAL: DerivativeScheme = DerivativeScheme::Spectral;
const CD4: DerivativeScheme = DerivativeScheme::CentralDifference4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Passes when `measured ≤ limit`; scaled by `--tolerance-scale`.
    AtMost,
    /// Passes when `measured ≥ limit`; not scaled.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub bound: Bound,
}

impl Check {
    fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            limit,
            bound: Bound::AtMost,
        }
    }

    fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            limit,
            bound: Bound::AtLeast,
        }
    }

    fn failed(name: &str, error: impl fmt::Display) -> Self {
        eprintln!("{name}: {error}");
        Self::at_most(name, f64::NAN, 0.0)
    }

    pub fn effective_limit(&self, scale: f64) -> f64 {
        match self.bound {
            Bound::AtMost => self.limit * scale,
            Bound::AtLeast => self.limit,
        }
    }

    /// NaN never passes.
    pub fn passes(&self, scale: f64) -> bool {
        let limit = self.effective_limit(scale);
        match self.bound {
            Bound::AtMost => self.measured <= limit,
            Bound::AtLeast => self.measured >= limit,
        }
    }

    pub fn line(&self, scale: f64) -> String {
        let (verdict, op) = match (self.passes(scale), self.bound) {
            (true, Bound::AtMost) => ("PASS", "<="),
            (true, Bound::AtLeast) => ("PASS", ">="),
            (false, Bound::AtMost) => ("FAIL", "<="),
            (false, Bound::AtLeast) => ("FAIL", ">="),
        };
        format!(
            "{verdict} {:<34} measured {:.3e} {op} {:.3e}",
            self.name,
            self.measured,
            self.effective_limit(scale)
        )
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub level: Level,
    pub scale: f64,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl Report {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passes(self.scale)).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

type Group = fn() -> Vec<Check>;

/// Runs the suite; groups execute concurrently and report in fixed order.
pub fn run_suite(level: Level, scale: f64) -> Report {
    let start = Instant::now();
    let mut groups: Vec<Group> = vec![
        derivation_group,
        eigenstate_group,
        elimination_group,
        null_force_group,
        homogeneity_group,
        pinning_group,
        kostin_group,
        round_trip_group,
    ];
    if level == Level::Full {
        groups.extend([spatial_order_group as Group, temporal_order_group as Group]);
    }
    let checks = groups.par_iter().map(|g| g()).collect::<Vec<_>>().concat();
    Report {
        level,
        scale,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn final_psi(t: &Trajectory) -> Result<WaveFunction> {
    t.final_state().ok_or(cqhj_core::Error::ZeroState)?
}

fn periodic_potential(g: &Arc<Grid>) -> Result<Potential> {
    let k = TAU / g.length();
    let samples = g
        .coords()
        .iter()
        .map(|&x| 0.8 * (k * x).cos() + 0.3 * (2.0 * k * x).sin())
        .collect();
    Potential::custom(g.clone(), samples)
}

fn collect(name_prefix: &str, f: impl FnOnce() -> Result<Vec<Check>>) -> Vec<Check> {
    f().unwrap_or_else(|e| vec![Check::failed(name_prefix, e)])
}

/// Momentum identities on random band-limited nodeless states.
fn derivation_group() -> Vec<Check> {
    collect("derivation", || {
        let g = Grid::periodic(-8.0, 8.0, 512)?;
        let v = periodic_potential(&g)?;
        let (mut lap, mut worst, mut agree) = (0.0f64, 0.0f64, 0.0f64);
        for seed in 0..20 {
            let psi = random_nodeless(&g, seed, NodelessSpec::default())?;
            let r = derivation_residuals(&psi, &v, SPECTRAL)?;
            lap = lap.max(r.laplacian_identity);
            worst = worst.max(r.max_residual());
            agree = agree.max(r.form_agreement);
        }
        Ok(vec![
            Check::at_most("laplacian_identity", lap, 1e-7),
            Check::at_most("derivation_residuals", worst, 1e-7),
            Check::at_most("rhs_form_agreement", agree, 1e-9),
        ])
    })
}

/// H is constant and p is stationary for oscillator eigenstates.
fn eigenstate_group() -> Vec<Check> {
    collect("eigenstate_h_constancy", || {
        let g = Grid::periodic(-10.0, 10.0, 128)?;
        let v = Potential::harmonic(g.clone(), 1.0)?;
        let (mut spread, mut mean, mut rhs) = (0.0f64, 0.0f64, 0.0f64);
        for n in 0..=3 {
            let pair = ho_eigenstate(n, 1.0, &g)?;
            let p = psi_to_p(&pair.state, SPECTRAL)?;
            let h = quantum_hamiltonian_field(&p, &v, SPECTRAL)?;
            spread = spread.max(h.std() / pair.energy);
            mean = mean.max((h.mean() - pair.energy).norm() / pair.energy);
            rhs = rhs.max(cqhj_rhs(&p, &v, SPECTRAL)?.max_abs());
        }
        Ok(vec![
            Check::at_most("eigenstate_h_std_relative", spread, 1e-5),
            Check::at_most("eigenstate_h_mean_relative", mean, 1e-5),
            Check::at_most("eigenstate_rhs_max", rhs, 1e-6),
        ])
    })
}

/// Largest `|p_cqhj − p_schrodinger|` over `t ∈ [0, 1]` for a displaced,
/// boosted Gaussian in a harmonic well, compared where `|ψ| ≥ 1e-4` of its
/// peak.
pub fn elimination_error(n: usize) -> Result<f64> {
    let g = Grid::periodic(-10.0, 10.0, n)?;
    let v = Potential::harmonic(g.clone(), 1.0)?;
    let psi = gaussian_packet(0.5, 0.3, 0.9, &g)?;
    let (t_final, stride_time) = (1.0, 0.1);
    let dt_max = 0.25 * g.dx() * g.dx();
    let per = (stride_time / dt_max).ceil() as usize;
    let dt = stride_time / per as f64;
    let lin = schrodinger_evolve(
        &psi,
        &v,
        &IntegratorSpec::new(Method::SplitStep, dt).with_stride(per),
        t_final,
    )
    .map_err(|e| e.error)?;
    let p0 = psi_to_p(&psi, SPECTRAL)?;
    let (pw, vw, w) = restrict_to_support(&p0, &v)?;
    let spec = IntegratorSpec::new(Method::RungeKutta4, dt).with_stride(per);
    let tr = cqhj_evolve(&pw, &vw, &spec, t_final).map_err(|e| e.error)?;
    let mut err = 0.0f64;
    for (snap, lsnap) in tr.snapshots.iter().zip(&lin.snapshots) {
        let (Snapshot::Momentum(p), Snapshot::Psi(ps)) = (snap, lsnap) else {
            return Err(cqhj_core::Error::InvalidArgument("unexpected snapshot kind".into()));
        };
        let pl = psi_to_p(ps, SPECTRAL)?;
        let floor = 1e-4 * ps.max_abs();
        for (i, j) in w.clone().enumerate() {
            if ps.values()[j].norm() >= floor {
                err = err.max((pl.values()[j] - p.values()[i]).norm());
            }
        }
    }
    Ok(err)
}

fn elimination_group() -> Vec<Check> {
    collect("psi_elimination", || {
        let coarse = elimination_error(256)?;
        let fine = elimination_error(512)?;
        Ok(vec![
            Check::at_most("psi_elimination_p_error_n512", fine, 1e-4),
            Check::at_most("psi_elimination_refinement_ratio", fine / coarse, 0.5),
        ])
    })
}

/// Three distinct initial states for the Schrödinger-limit comparison.
pub fn null_force_states(g: &Arc<Grid>) -> Result<Vec<WaveFunction>> {
    Ok(vec![
        gaussian_packet(1.0, 0.5, 0.8, g)?,
        superpose(
            &[c(0.6), C64::new(0.0, 0.8)],
            &[ho_eigenstate(0, 1.0, g)?.state, ho_eigenstate(3, 1.0, g)?.state],
        )?,
        random_nodeless(g, 7, NodelessSpec::default())?,
    ])
}

/// `1 − F` between null-force collapsible and linear evolution over `t = 1`.
pub fn null_force_deficit(psi: &WaveFunction, v: &Potential) -> Result<f64> {
    let spec = IntegratorSpec::new(Method::SplitStep, 1e-3);
    let a = schrodinger_evolve(psi, v, &spec, 1.0).map_err(|e| e.error)?;
    let b = collapsible_evolve(psi, v, &CollapseForce::null(), &spec, 1.0).map_err(|e| e.error)?;
    Ok((1.0 - fidelity(&final_psi(&a)?, &final_psi(&b)?)?).max(0.0))
}

fn null_force_group() -> Vec<Check> {
    collect("null_force_reduction", || {
        let g = Grid::periodic(-10.0, 10.0, 256)?;
        let v = Potential::harmonic(g.clone(), 1.0)?;
        let mut worst = 0.0f64;
        for psi in null_force_states(&g)? {
            worst = worst.max(null_force_deficit(&psi, &v)?);
        }
        Ok(vec![Check::at_most("null_force_fidelity_deficit", worst, 1e-7)])
    })
}

/// Box oscillator, its two lowest eigenpairs and `(φ0 + φ1)/√2`.
pub fn pinning_setup() -> Result<(Arc<Grid>, Potential, Vec<EigenPair>, WaveFunction)> {
    let g = Grid::boxed(-10.0, 10.0, 401)?;
    let v = Potential::harmonic(g.clone(), 1.0)?;
    let eig = solve_eigenstates(&v, 2)?;
    let mix = superpose(
        &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)],
        &[eig[0].state.clone(), eig[1].state.clone()],
    )?;
    Ok((g, v, eig, mix))
}

/// Largest normalized-density gap between runs from `ψ0` and
/// `2.7 e^{iπ/5} ψ0`, and the largest logged norm deviation.
pub fn homogeneity_gap(psi: &WaveFunction, v: &Potential, force: &CollapseForce) -> Result<(f64, f64)> {
    let scale = C64::from_polar(2.7, PI / 5.0);
    let spec = IntegratorSpec::new(Method::CrankNicolson, 0.005)
        .renormalized()
        .with_stride(20);
    let a = collapsible_evolve(psi, v, force, &spec, 2.0).map_err(|e| e.error)?;
    let b = collapsible_evolve(&psi.scaled(scale)?, v, force, &spec, 2.0).map_err(|e| e.error)?;
    let (mut density, mut norm) = (0.0f64, 0.0f64);
    for (sa, sb) in a.wave_functions()?.iter().zip(b.wave_functions()?).skip(1) {
        let da = sa.normalized_density()?;
        let db = sb.normalized_density()?;
        density = da.iter().zip(&db).map(|(x, y)| (x - y).abs()).fold(density, f64::max);
        norm = norm.max((sa.norm() - 1.0).abs()).max((sb.norm() - 1.0).abs());
    }
    Ok((density, norm))
}

fn homogeneity_group() -> Vec<Check> {
    collect("homogeneity", || {
        let (g, v, eig, mix) = pinning_setup()?;
        let pinning = CollapseForce::pinning_to(&eig[0], 2.0, CD4)?;
        let (dp, np) = homogeneity_gap(&mix, &v, &pinning)?;
        let kostin = CollapseForce::kostin(0.3)?;
        let (dk, nk) = homogeneity_gap(&gaussian_packet(1.0, 0.0, 0.8, &g)?, &v, &kostin)?;
        Ok(vec![
            Check::at_most("homogeneity_density_pinning", dp, 1e-10),
            Check::at_most("homogeneity_density_kostin", dk, 1e-10),
            Check::at_most("renormalized_norm_deviation", np.max(nk), 1e-9),
        ])
    })
}

/// Collapse time of `(φ0 + φ1)/√2` onto `φ0` under pinning strength `kappa`,
/// with `dt = 0.01/κ`.
pub fn pinning_tau(kappa: f64, epsilon: f64) -> Result<Option<f64>> {
    let (_, v, eig, mix) = pinning_setup()?;
    let force = CollapseForce::pinning_to(&eig[0], kappa, CD4)?;
    let spec = IntegratorSpec::new(Method::CrankNicolson, 0.01 / kappa).renormalized();
    let tr = collapsible_evolve(&mix, &v, &force, &spec, 16.0 / kappa).map_err(|e| e.error)?;
    Ok(collapse_time(&tr, &eig[0].state, epsilon)?.time())
}

fn pinning_group() -> Vec<Check> {
    collect("pinning_scaling", || {
        let taus = [1.0, 2.0, 4.0]
            .par_iter()
            .map(|&k| pinning_tau(k, 1e-3))
            .collect::<Result<Vec<_>>>()?;
        let missing = taus.iter().filter(|t| t.is_none()).count() as f64;
        let deviation = match taus[..] {
            [Some(a), Some(b), Some(c)] => ((b / a) - 0.5).abs().max(((c / b) - 0.5).abs()),
            _ => f64::NAN,
        };
        Ok(vec![
            Check::at_most("pinning_collapse_not_reached", missing, 0.0),
            Check::at_most("pinning_tau_ratio_deviation", deviation, 0.1),
        ])
    })
}

/// Ground-state fidelity deficit and largest energy step of a damped
/// coherent state, `γ = 0.2` over `t = 20`.
pub fn kostin_relaxation() -> Result<(f64, f64)> {
    let g = Grid::boxed(-10.0, 10.0, 401)?;
    let v = Potential::harmonic(g.clone(), 1.0)?;
    let ground = solve_eigenstates(&v, 1)?.remove(0);
    let psi = gaussian_packet(0.5, 0.0, 1.0, &g)?;
    let spec = IntegratorSpec::new(Method::CrankNicolson, 0.01).renormalized();
    let tr = collapsible_evolve(&psi, &v, &CollapseForce::kostin(0.2)?, &spec, 20.0).map_err(|e| e.error)?;
    let rows = tr.observables(&v, Some(&ground.state), CD4)?;
    let rise = rows.windows(2).map(|w| w[1].energy - w[0].energy).fold(0.0, f64::max);
    let last = rows.last().and_then(|r| r.fidelity_target).unwrap_or(0.0);
    Ok((1.0 - last, rise))
}

fn kostin_group() -> Vec<Check> {
    collect("kostin_relaxation", || {
        let (deficit, rise) = kostin_relaxation()?;
        Ok(vec![
            Check::at_most("kostin_ground_fidelity_deficit", deficit, 1e-2),
            Check::at_most("kostin_energy_step_increase", rise, 1e-8),
        ])
    })
}

fn round_trip_group() -> Vec<Check> {
    collect("round_trip", || {
        let mut worst = 0.0f64;
        for g in [Grid::periodic(-10.0, 10.0, 256)?, Grid::boxed(-10.0, 10.0, 401)?] {
            let scheme = DerivativeScheme::natural_for(g.boundary());
            let psi = gaussian_packet(0.7, 1.3, 1.2, &g)?;
            let (back, _) = p_to_psi(&psi_to_p(&psi, scheme)?.without_slope())?;
            worst = worst.max(1.0 - fidelity(&psi, &back)?);
        }
        Ok(vec![Check::at_most("round_trip_fidelity_deficit", worst, 1e-8)])
    })
}

fn sci(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
}

fn order(errors: &[f64]) -> f64 {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

/// Convergence orders of fourth-order differences and the finite-difference
/// eigensolver for `n ∈ {128, 256, 512}`.
fn spatial_order_group() -> Vec<Check> {
    collect("spatial_order", || {
        let sizes = [128usize, 256, 512];
        let (mut grad, mut lap, mut eig) = (Vec::new(), Vec::new(), Vec::new());
        for &n in &sizes {
            let g = Grid::boxed(-8.0, 8.0, n)?;
            let f = ComplexField::from_fn(g.clone(), |x| c((-x * x / 2.0).exp() * (1.5 * x).cos()))?;
            let exact_d1 = |x: f64| {
                let e = (-x * x / 2.0).exp();
                -x * e * (1.5 * x).cos() - 1.5 * e * (1.5 * x).sin()
            };
            let exact_d2 = |x: f64| {
                let e = (-x * x / 2.0).exp();
                (x * x - 1.0 - 2.25) * e * (1.5 * x).cos() + 3.0 * x * e * (1.5 * x).sin()
            };
            let d1 = gradient(&f, CD4)?;
            let d2 = laplacian(&f, CD4)?;
            let coords = g.coords();
            grad.push(
                coords
                    .iter()
                    .zip(d1.values())
                    .map(|(&x, z)| (z.re - exact_d1(x)).abs())
                    .fold(0.0, f64::max),
            );
            lap.push(
                coords
                    .iter()
                    .zip(d2.values())
                    .map(|(&x, z)| (z.re - exact_d2(x)).abs())
                    .fold(0.0, f64::max),
            );
            let v = Potential::harmonic(Grid::boxed(-10.0, 10.0, n)?, 1.0)?;
            eig.push((solve_eigenstates(&v, 1)?[0].energy - 0.5).abs());
        }
        for (name, e) in [
            ("cd4_gradient", &grad),
            ("cd4_laplacian", &lap),
            ("ground_energy", &eig),
        ] {
            eprintln!("{name} errors for n = {sizes:?}: {}", sci(e));
        }
        Ok(vec![
            Check::at_least("cd4_gradient_order", order(&grad), 3.5),
            Check::at_least("cd4_laplacian_order", order(&lap), 3.5),
            Check::at_least("ground_energy_order", order(&eig), 3.5),
        ])
    })
}

/// Time-step orders of the collapsible (Strang) and momentum-space (RK4)
/// integrators.
fn temporal_order_group() -> Vec<Check> {
    collect("temporal_order", || {
        let (g, v, eig, _) = pinning_setup()?;
        let psi = gaussian_packet(1.0, 0.3, 0.8, &g)?;
        let force = CollapseForce::pinning_to(&eig[0], 1.0, CD4)?;
        let run = |dt: f64| -> Result<WaveFunction> {
            let spec = IntegratorSpec::new(Method::CrankNicolson, dt).renormalized();
            final_psi(&collapsible_evolve(&psi, &v, &force, &spec, 1.0).map_err(|e| e.error)?)
        };
        let reference = run(0.02 / 8.0)?;
        let ray = |s: &WaveFunction| -> Result<f64> { Ok((1.0 - fidelity(s, &reference)?).max(0.0).sqrt()) };
        let strang = [ray(&run(0.02)?)?, ray(&run(0.01)?)?];

        let gp = Grid::periodic(-10.0, 10.0, 128)?;
        let vp = Potential::harmonic(gp.clone(), 1.0)?;
        let p0 = psi_to_p(&gaussian_packet(0.4, 0.2, 0.8, &gp)?, SPECTRAL)?;
        let (pw, vw, _) = restrict_to_support(&p0, &vp)?;
        let base = 0.9 * rk4_max_step(&pw, CD4);
        let rk = |dt: f64| -> Result<ComplexField> {
            let tr = cqhj_evolve(&pw, &vw, &IntegratorSpec::new(Method::RungeKutta4, dt), 0.2).map_err(|e| e.error)?;
            match tr.snapshots.last() {
                Some(Snapshot::Momentum(p)) => Ok(p.field().clone()),
                _ => Err(cqhj_core::Error::ZeroState),
            }
        };
        let reference = rk(base / 8.0)?;
        let gap = |f: ComplexField| -> Result<f64> { Ok(f.sub(&reference)?.max_abs()) };
        let rk4 = [gap(rk(base)?)?, gap(rk(base / 2.0)?)?];
        eprintln!("strang errors for dt, dt/2: {}; rk4: {}", sci(&strang), sci(&rk4));
        Ok(vec![
            Check::at_least("collapsible_dt_order", order(&strang), 1.8),
            Check::at_least("rk4_dt_order", order(&rk4), 3.5),
        ])
    })
}
