use std::f64::consts::PI;

use diracsea::dynamics::lattice::{lattice_packet, ring_jump_ensemble, ring_model, ContinuumPacket};
use diracsea::dynamics::*;
use diracsea::fock::*;
use diracsea::modes::{build_mode_lattice, SpaceDim, SpeciesTable};
use diracsea::position::time_reverse_single;
use diracsea::{Exec, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn one_fermion(mass: f64, box_len: f64, max_mode: i64, boson: usize) -> HilbertSpace {
    let cutoff = 2.0 * PI * (max_mode as f64 + 0.5) / box_len;
    let lat = build_mode_lattice(SpaceDim::One, box_len, cutoff).unwrap();
    let basis = ModeBasis::build(lat, SpeciesTable::single(mass)).unwrap();
    let b = if boson > 1 { BosonSpace::new(boson).unwrap() } else { BosonSpace::none() };
    HilbertSpace::new(basis, 1, b).unwrap()
}

fn positive(space: &HilbertSpace, coeff: impl Fn(i64) -> C64) -> QuantumState {
    let b = &space.basis;
    let c: Vec<C64> = (0..b.len())
        .map(|i| {
            let l = b.label(i);
            if l.band == Band::Positive {
                coeff(b.lattice().integer(l.momentum)[0])
            } else {
                C64::from(0.0)
            }
        })
        .collect();
    single_particle_state(space, &c).unwrap()
}

fn free_plan(space: &HilbertSpace) -> EvolutionPlan {
    let mut h = build_free_hamiltonian(space);
    h.mark_hermitian(1e-12).unwrap();
    EvolutionPlan::new(h, Exec::Parallel).unwrap()
}

fn beating(space: &HilbertSpace) -> QuantumState {
    positive(space, |n| C64::from_polar(1.0 + 0.1 * n as f64, 0.3 * n as f64))
}

#[test]
fn single_mode_moves_in_a_straight_line() {
    let space = one_fermion(0.7, 2.0 * PI, 3, 1);
    let psi = positive(&space, |n| if n == 2 { C64::from(1.0) } else { C64::from(0.0) });
    let plan = free_plan(&space);
    let evo = Evolution::new(&plan, psi).unwrap();
    let flow = Flow::new(&space, &evo, None, IntegratorSpec::new(0.05), Exec::Sequential).unwrap();
    let x0 = 1.3;
    let t1 = 7.0;
    let tr = integrate_trajectory(&flow, &[x0], 0.0, t1).unwrap();
    let v = 2.0 / (4.0f64 + 0.49).sqrt();
    let expect = (x0 + v * t1).rem_euclid(2.0 * PI);
    let got = tr.positions.last().unwrap()[0];
    assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    assert!(tr.positions.iter().all(|p| (0.0..2.0 * PI).contains(&p[0])));
}

#[test]
fn time_reversal_returns_to_the_start() {
    let space = one_fermion(1.0, 2.0 * PI, 2, 1);
    let plan = free_plan(&space);
    let evo = Evolution::new(&plan, beating(&space)).unwrap();
    let spec = IntegratorSpec::new(0.01);
    let t_end = 6.0;
    let x0 = 2.1;
    let fwd = Flow::new(&space, &evo, None, spec.clone(), Exec::Sequential).unwrap();
    let x1 = integrate_trajectory(&fwd, &[x0], 0.0, t_end).unwrap().positions.last().unwrap().clone();
    let rev = Reversed { inner: evo, end: t_end, map: |a: &[C64]| time_reverse_single(&space, a) };
    let back = Flow::new(&space, &rev, None, spec, Exec::Sequential).unwrap();
    let x2 = integrate_trajectory(&back, &x1, 0.0, t_end).unwrap().positions.last().unwrap()[0];
    let l = 2.0 * PI;
    let d = (x2 - x0 + l / 2.0).rem_euclid(l) - l / 2.0;
    assert!(d.abs() < 1e-6 * l, "round trip error {d}");
}

#[test]
fn step_refinement_agrees() {
    let space = one_fermion(0.5, 2.0 * PI, 2, 1);
    let psi = positive(&space, |n| match n {
        -1 => C64::from(1.0),
        2 => C64::new(0.0, 0.8),
        _ => C64::from(0.0),
    });
    let plan = free_plan(&space);
    let evo = Evolution::new(&plan, psi).unwrap();
    let run = |h: f64| {
        let flow = Flow::new(&space, &evo, None, IntegratorSpec::new(h), Exec::Sequential).unwrap();
        integrate_trajectory(&flow, &[0.4], 0.0, 5.0).unwrap().positions.last().unwrap()[0]
    };
    let coarse = run(0.02);
    let fine = run(0.02 / 16.0);
    assert!((coarse - fine).abs() < 1e-7 * 2.0 * PI, "{coarse} vs {fine}");
}

#[test]
fn trajectories_do_not_cross() {
    let space = one_fermion(1.0, 2.0 * PI, 2, 1);
    let plan = free_plan(&space);
    let evo = Evolution::new(&plan, beating(&space)).unwrap();
    let spec = EnsembleSpec {
        trajectories: 300,
        seed: 11,
        t0: 0.0,
        t1: 12.0,
        slices: 60,
        bins: 20,
        integrator: IntegratorSpec::new(0.02),
        mode: EnsembleMode::Deterministic,
        jump_grid: None,
        initial: InitialDistribution::Equilibrium,
    };
    let (set, _) = run_ensemble(&space, &evo, None, &spec, Exec::Parallel).unwrap();
    assert!(set.jumps.is_empty());
    let l = 2.0 * PI;
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set.configurations[0][a][0].total_cmp(&set.configurations[0][b][0]));
    let mut unwrapped: Vec<f64> = set.configurations[0].iter().map(|c| c[0]).collect();
    for s in 1..set.configurations.len() {
        for i in 0..set.len() {
            let prev = unwrapped[i].rem_euclid(l);
            let d = set.configurations[s][i][0] - prev;
            unwrapped[i] += d - l * (d / l).round();
        }
        for w in order.windows(2) {
            assert!(unwrapped[w[0]] < unwrapped[w[1]], "crossing at slice {s}");
        }
        assert!(unwrapped[order[order.len() - 1]] < unwrapped[order[0]] + l);
    }
    for i in 0..set.len() {
        assert!((unwrapped[i] - set.configurations[0][i][0] - set.displacement[i][0]).abs() < 1e-9);
    }
}

#[test]
fn stationary_state_stays_in_the_noise_band() {
    let space = one_fermion(1.0, 2.0 * PI, 2, 1);
    let psi = positive(&space, |n| if n == 1 { C64::from(1.0) } else { C64::from(0.0) });
    let plan = free_plan(&space);
    let evo = Evolution::new(&plan, psi).unwrap();
    let spec = EnsembleSpec {
        trajectories: 4000,
        seed: 5,
        t0: 0.0,
        t1: 3.0,
        slices: 3,
        bins: 25,
        integrator: IntegratorSpec::new(0.05),
        mode: EnsembleMode::Deterministic,
        jump_grid: None,
        initial: InitialDistribution::Equilibrium,
    };
    let (_, report) = run_ensemble(&space, &evo, None, &spec, Exec::Parallel).unwrap();
    assert!(report.tv.iter().all(|&t| (0.0..=1.0).contains(&t) && t < report.noise_scale), "{report:?}");
}

#[test]
fn ensembles_are_bit_reproducible() {
    let space = one_fermion(1.0, 2.0 * PI, 2, 1);
    let plan = free_plan(&space);
    let evo = Evolution::new(&plan, beating(&space)).unwrap();
    let spec = EnsembleSpec {
        trajectories: 64,
        seed: 99,
        t0: 0.0,
        t1: 1.0,
        slices: 2,
        bins: 10,
        integrator: IntegratorSpec::new(0.05),
        mode: EnsembleMode::Deterministic,
        jump_grid: None,
        initial: InitialDistribution::Equilibrium,
    };
    let a = run_ensemble(&space, &evo, None, &spec, Exec::Parallel).unwrap();
    let b = run_ensemble(&space, &evo, None, &spec, Exec::Sequential).unwrap();
    assert_eq!(a, b);
    let mut other = spec.clone();
    other.seed = 100;
    let c = run_ensemble(&space, &evo, None, &other, Exec::Parallel).unwrap();
    assert_ne!(a.0.configurations, c.0.configurations);
}

#[test]
fn uniform_start_is_detected() {
    let space = one_fermion(1.0, 2.0 * PI, 2, 1);
    let plan = free_plan(&space);
    let evo = Evolution::new(&plan, positive(&space, |_| C64::from(1.0))).unwrap();
    let mut spec = EnsembleSpec {
        trajectories: 4000,
        seed: 3,
        t0: 0.0,
        t1: 2.0,
        slices: 2,
        bins: 50,
        integrator: IntegratorSpec::new(0.05),
        mode: EnsembleMode::Deterministic,
        jump_grid: None,
        initial: InitialDistribution::Uniform,
    };
    let (_, bad) = run_ensemble(&space, &evo, None, &spec, Exec::Parallel).unwrap();
    assert!(bad.tv[0] > 0.3, "{bad:?}");
    spec.initial = InitialDistribution::Equilibrium;
    let (_, good) = run_ensemble(&space, &evo, None, &spec, Exec::Parallel).unwrap();
    assert!(good.max_tv() < 0.1);
}

#[test]
fn lattice_flux_matches_density_rate() {
    let sites = 16;
    let model = ring_model(sites, 8.0, 1.3).unwrap();
    let psi0 = lattice_packet(sites, 8.0, 3.0, 1.0, 1.5);
    let plan = EvolutionPlan::new(model.hamiltonian().clone(), Exec::Sequential).unwrap();
    let s0 = QuantumState::normalized(psi0, 0.0).unwrap();
    let t = 0.37;
    let eps = 1e-4;
    let at = |t: f64| plan.evolve(&s0, t).unwrap();
    let mid = at(t);
    let flux = model.net_flux(mid.amplitudes());
    let (a, b) = (at(t + eps), at(t - eps));
    for x in 0..sites {
        let rate = (model.density(a.amplitudes(), x) - model.density(b.amplitudes(), x)) / (2.0 * eps);
        assert!((flux[x] - rate).abs() < 1e-6, "site {x}: {} vs {rate}", flux[x]);
    }
    // J is antisymmetric, so the total flux vanishes.
    assert!(flux.iter().sum::<f64>().abs() < 1e-12);
}

#[test]
fn position_diagonal_hamiltonian_never_jumps() {
    let h = OperatorMatrix::diagonal(&[C64::from(1.0), C64::from(-2.0), C64::from(0.5)]);
    let mut h = h;
    h.mark_hermitian(1e-12).unwrap();
    let model = LatticeModel::new(3, 1, h).unwrap();
    let psi = [C64::new(0.3, 0.1), C64::new(-0.5, 0.4), C64::new(0.2, 0.6)];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for y in 0..3 {
        assert!(model.rates_from(&psi, y).is_empty());
        assert_eq!(model.jump_step(&psi, y, 10.0, &mut rng).unwrap(), (y, 0));
    }
}

#[test]
fn oversized_step_is_rejected() {
    let model = ring_model(20, 5.0, 1.0).unwrap();
    let psi = lattice_packet(20, 5.0, 2.5, 0.8, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let err = model.jump_step(&psi, 10, 5.0, &mut rng).unwrap_err();
    assert!(matches!(err, diracsea::Error::StepTooLarge(_)));
}

#[test]
fn jump_count_matches_weighted_rate() {
    let spec = RefinementSpec::reference(4000, 17);
    let (_, observed, expected, _) = ring_jump_ensemble(&spec, 32, Exec::Parallel).unwrap();
    assert!(((observed - expected) / expected).abs() < 0.05, "{observed} vs {expected}");
}

#[test]
fn continuum_gaussian_follows_the_analytic_flow() {
    // Free Gaussian guidance: x(t) = c + (x0 - c) s(t) + k0 t / m with
    // s(t) = sqrt(1 + (t / (2 m w^2))^2).
    let (m, w, k0, c) = (1.0, 1.0, 2.0, 10.0);
    let p = ContinuumPacket::gaussian(20.0, m, 64, c, w, k0);
    let t = 2.0;
    let s = (1.0f64 + (t / (2.0 * m * w * w)).powi(2)).sqrt();
    for &x0 in &[8.5, 10.0, 11.7] {
        let d = p.displacement(x0, t, 0.01);
        let expect = (x0 - c) * (s - 1.0) + k0 * t / m;
        assert!((d - expect).abs() < 1e-6, "{d} vs {expect}");
    }
}

#[test]
fn interaction_jumps_preserve_equilibrium() {
    let space = one_fermion(1.0, 2.0 * PI, 2, 2);
    let kernel = InteractionKernel::yukawa(0.6).with_profile(SpatialProfile::Cosine { harmonic: 1 });
    let h = build_hamiltonian(&space, Some(&kernel), 1.0, Exec::Parallel).unwrap();
    let hi = build_interaction(&space, &kernel, Exec::Parallel).unwrap();
    let plan = EvolutionPlan::new(h, Exec::Parallel).unwrap();
    let evo = Evolution::new(&plan, beating(&space)).unwrap();
    let spec = EnsembleSpec {
        trajectories: 5000,
        seed: 21,
        t0: 0.0,
        t1: 3.0,
        slices: 3,
        bins: 20,
        integrator: IntegratorSpec::new(0.02),
        mode: EnsembleMode::Jump,
        jump_grid: Some(64),
        initial: InitialDistribution::Equilibrium,
    };
    let inter = Interaction { kernel: &kernel, operator: &hi };
    let (set, report) = run_ensemble(&space, &evo, Some(inter), &spec, Exec::Parallel).unwrap();
    assert!(!set.jumps.is_empty());
    assert!(report.max_tv() < 0.06, "{report:?}");
}

#[test]
fn certain_branch_captures_everything() {
    let mut spec = MeasurementSpec::reference(1.0, 400, 4);
    spec.duration = 0.5;
    let r = measurement_scenario(&spec, Exec::Parallel).unwrap();
    assert_eq!(r.occupancy, [400, 0]);
    assert!(r.overlap < 1e-3);
    spec.centers = [9.0, 11.0];
    spec.weight = 0.5;
    assert!(matches!(measurement_scenario(&spec, Exec::Parallel), Err(diracsea::Error::BranchOverlap(_))));
}
