//! Turns a validated scenario into grids, states, forces and integrator
//! settings.

use std::sync::Arc;

use cqhj_core::{
    gaussian_packet, random_nodeless, solve_eigenstates, superpose, CollapseForce, EigenPair, Grid, IntegratorSpec,
    NodelessSpec, Potential, UnitSystem, WaveFunction, C64,
};

use crate::config::{ConfigError, ForceSection, InitialSection, ParsedScenario, PotentialSection, Scenario};

#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Arc<Grid>,
    pub potential: Potential,
    pub psi0: WaveFunction,
    pub force: CollapseForce,
    pub spec: IntegratorSpec,
    /// Fidelity target: level `run.target_level` of the solved basis.
    pub target: WaveFunction,
    pub units: UnitSystem,
    pub duration: f64,
    pub epsilon: f64,
}

fn highest_level(s: &Scenario) -> usize {
    let mut top = s.target_level();
    match &s.initial {
        InitialSection::Eigenstate { level } => top = top.max(*level),
        InitialSection::Superposition { levels, .. } => top = top.max(levels.iter().copied().max().unwrap_or(0)),
        _ => {}
    }
    if let ForceSection::Pinning { target_level, .. } = s.force {
        top = top.max(target_level);
    }
    top
}

pub fn build(parsed: &ParsedScenario) -> Result<Setup, ConfigError> {
    let s = &parsed.scenario;
    let src = &parsed.source;
    let g = &s.grid;
    let grid =
        Grid::new(g.x_min, g.x_max, g.n_points, g.boundary.into()).map_err(|e| src.at("grid", "", e.to_string()))?;

    let potential = match s.potential {
        PotentialSection::Free => Ok(Potential::free(grid.clone())),
        PotentialSection::Harmonic { omega } => Potential::harmonic(grid.clone(), omega),
        PotentialSection::Box => Potential::box_well(grid.clone()),
        PotentialSection::DoubleWell { a, b } => Potential::double_well(grid.clone(), a, b),
    }
    .map_err(|e| src.at("potential", "kind", e.to_string()))?;

    let levels = highest_level(s) + 1;
    let basis: Vec<EigenPair> = solve_eigenstates(&potential, levels)
        .map_err(|e| src.at("run", "target_level", format!("cannot solve {levels} eigenstates: {e}")))?;

    let psi0 = match &s.initial {
        InitialSection::Packet { x0, k0, sigma } => gaussian_packet(*x0, *k0, *sigma, &grid),
        InitialSection::Eigenstate { level } => Ok(basis[*level].state.clone()),
        InitialSection::Superposition { levels, coefficients } => {
            let c: Vec<C64> = coefficients.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            let states: Vec<WaveFunction> = levels.iter().map(|&l| basis[l].state.clone()).collect();
            superpose(&c, &states)
        }
        InitialSection::RandomNodeless { seed, modes, amplitude } => random_nodeless(
            &grid,
            *seed,
            NodelessSpec {
                modes: *modes,
                amplitude: *amplitude,
            },
        ),
    }
    .map_err(|e| src.at("initial", "kind", e.to_string()))?;

    let scheme = s.scheme();
    let force = match s.force {
        ForceSection::Null => Ok(CollapseForce::null()),
        ForceSection::Pinning { kappa, target_level } => CollapseForce::pinning_to(&basis[target_level], kappa, scheme),
        ForceSection::Kostin { gamma } => CollapseForce::kostin(gamma),
    }
    .map_err(|e| src.at("force", "kind", e.to_string()))?;

    let it = &s.integrator;
    let mut spec = IntegratorSpec::new(it.method, it.dt)
        .with_stride(s.run.snapshot_stride)
        .with_scheme(scheme);
    spec.renormalize_each_step = it.renormalize;

    let units =
        UnitSystem::new(s.units.mass_kg, s.units.length_m).map_err(|e| src.at("units", "mass_kg", e.to_string()))?;

    Ok(Setup {
        grid,
        potential,
        psi0,
        force,
        spec,
        target: basis[s.target_level()].state.clone(),
        units,
        duration: s.run.duration,
        epsilon: s.run.epsilon,
    })
}
