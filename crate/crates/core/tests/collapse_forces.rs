use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::{Arc, OnceLock};

use cqhj_core::cqhj::{psi_to_p_with_threshold, unwrapped_phase};
use cqhj_core::*;
use proptest::prelude::*;

const CD4: DerivativeScheme = DerivativeScheme::CentralDifference4;
const SPECTRAL: DerivativeScheme = DerivativeScheme::Spectral;

fn ho_box() -> (Arc<Grid>, Potential, Vec<EigenPair>) {
    static CACHE: OnceLock<(Arc<Grid>, Potential, Vec<EigenPair>)> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            let g = Grid::boxed(-10.0, 10.0, 801).unwrap();
            let v = Potential::harmonic(g.clone(), 1.0).unwrap();
            let pairs = solve_eigenstates(&v, 2).unwrap();
            (g, v, pairs)
        })
        .clone()
}

fn equal_mix(pairs: &[EigenPair]) -> WaveFunction {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    superpose(&[h, h], &[pairs[0].state.clone(), pairs[1].state.clone()]).unwrap()
}

#[test]
fn constructors_validate_rates_and_tag_kinds() {
    let (_, _, pairs) = ho_box();
    assert!(CollapseForce::kostin(0.0).is_err());
    assert!(CollapseForce::kostin(f64::NAN).is_err());
    assert!(CollapseForce::pinning_to(&pairs[0], -1.0, CD4).is_err());
    let pin = CollapseForce::pinning_to(&pairs[0], 1.0, CD4).unwrap();
    let kostin = CollapseForce::kostin(0.2).unwrap();
    let null = CollapseForce::null();
    assert_eq!(
        (pin.tag(), kostin.tag(), null.tag()),
        (ForceTag::Pinning, ForceTag::KostinFriction, ForceTag::Null)
    );
    assert!(pin.depends_on_p() && kostin.depends_on_p() && !null.depends_on_p());
}

#[test]
fn pinning_vanishes_at_its_target() {
    let (_, _, pairs) = ho_box();
    let pin = CollapseForce::pinning_to(&pairs[0], 3.0, CD4).unwrap();
    let p = psi_to_p(&pairs[0].state, CD4).unwrap();
    assert_eq!(pin.evaluate(&p, 0.0).unwrap().max_abs(), 0.0);
}

#[test]
fn kostin_on_plane_wave_is_constant() {
    let g = Grid::periodic(0.0, std::f64::consts::TAU, 64).unwrap();
    let psi = WaveFunction::from_fn(g.clone(), |x| C64::from_polar(1.0, 2.0 * x)).unwrap();
    let f = CollapseForce::kostin(0.3)
        .unwrap()
        .evaluate(&psi_to_p(&psi, SPECTRAL).unwrap(), 0.0)
        .unwrap();
    assert!(f.values().iter().all(|z| (z - C64::new(-0.6, 0.0)).norm() <= 1e-12));
}

#[test]
fn pinning_acts_on_superpositions() {
    let (_, _, pairs) = ho_box();
    let pin = CollapseForce::pinning_to(&pairs[0], 1.0, CD4).unwrap();
    let p = psi_to_p(&equal_mix(&pairs), CD4).unwrap();
    let f = pin.evaluate(&p, 0.0).unwrap();
    assert!(f.max_abs() > 1e-2);
    let phi = gauge_potential(&f).unwrap();
    let spread = phi
        .values()
        .iter()
        .map(|z| (z - phi.values()[400]).norm())
        .fold(0.0, f64::max);
    assert!(spread > 1e-2);
}

#[test]
fn gauge_potential_examples() {
    let g = Grid::boxed(-2.0, 3.0, 101).unwrap();
    assert_eq!(gauge_potential(&ComplexField::zeros(g.clone())).unwrap().max_abs(), 0.0);
    let c = C64::new(0.7, -0.2);
    let phi = gauge_potential(&ComplexField::from_fn(g.clone(), |_| c).unwrap()).unwrap();
    for (x, v) in g.coords().iter().zip(phi.values()) {
        assert!((v - c * (x + 2.0)).norm() <= 1e-12);
    }
}

#[test]
fn kostin_gauge_term_is_phase_weighted() {
    let g = Grid::boxed(-12.0, 12.0, 2401).unwrap();
    let gamma = 0.4;
    let psi = WaveFunction::from_fn(g.clone(), |x| {
        C64::from_polar((-(x - 0.5) * (x - 0.5) / 3.0).exp(), 0.8 * x + 0.05 * x * x)
    })
    .unwrap();
    let p = psi_to_p(&psi, CD4).unwrap();
    let force = CollapseForce::kostin(gamma).unwrap().evaluate(&p, 0.0).unwrap();
    let phi = gauge_potential(&force).unwrap();
    let theta = unwrapped_phase(&psi);
    // −Φψ = γ(θ − θ_left)ψ up to a constant, which masking of the tails shifts
    let peak = psi.max_abs();
    let keep: Vec<usize> = (0..g.len())
        .filter(|&j| psi.values()[j].norm() >= 1e-3 * peak)
        .collect();
    let offset = phi.values()[keep[0]] + gamma * theta[keep[0]];
    for &j in &keep {
        let lhs = -phi.values()[j] * psi.values()[j];
        let want = (gamma * theta[j] - offset) * psi.values()[j];
        assert!((lhs - want).norm() <= 1e-8, "{j}: {}", (lhs - want).norm());
    }
}

#[test]
fn masking_threshold_barely_moves_the_gauge_term() {
    let (g, _, pairs) = ho_box();
    let pin = CollapseForce::pinning_to(&pairs[0], 1.0, CD4).unwrap();
    let psi = equal_mix(&pairs);
    let term = |eps: f64| {
        let p = psi_to_p_with_threshold(&psi, CD4, eps).unwrap();
        let phi = gauge_potential(&pin.evaluate(&p, 0.0).unwrap()).unwrap();
        let anchor = phi.values()[400];
        let v: Vec<C64> = phi
            .values()
            .iter()
            .zip(psi.values())
            .map(|(f, s)| (f - anchor) * s)
            .collect();
        ComplexField::new(g.clone(), v).unwrap()
    };
    let reference = term(1e-6);
    for eps in [1e-7, 1e-8] {
        let d = reference.max_abs_diff(&term(eps)).unwrap();
        assert!(d <= 1e-4, "{eps:e}: {d:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forces_are_degree_zero(re in -4.0..4.0f64, im in -4.0..4.0f64, kappa in 0.1..5.0f64, gamma in 0.1..2.0f64) {
        prop_assume!(re.hypot(im) > 1e-3);
        let (_, _, pairs) = ho_box();
        let psi = equal_mix(&pairs);
        let scaled = psi.scaled(C64::new(re, im)).unwrap();
        for force in [
            CollapseForce::pinning_to(&pairs[0], kappa, CD4).unwrap(),
            CollapseForce::kostin(gamma).unwrap(),
        ] {
            let a = force.evaluate(&psi_to_p(&psi, CD4).unwrap(), 0.3).unwrap();
            let b = force.evaluate(&psi_to_p(&scaled, CD4).unwrap(), 0.3).unwrap();
            prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-11 * a.max_abs().max(1.0));
        }
    }
}
