use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use diracsea::dynamics::*;
use diracsea::fluct::variance_quadrature;
use diracsea::fock::*;
use diracsea::modes::{build_mode_lattice, SpaceDim, SpeciesTable};
use diracsea::{Exec, C64};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn ensemble(c: &mut Criterion) {
    let l = 2.0 * PI;
    let basis = ModeBasis::build(build_mode_lattice(SpaceDim::One, l, 2.5).unwrap(), SpeciesTable::single(1.0)).unwrap();
    let space = HilbertSpace::new(basis, 1, BosonSpace::none()).unwrap();
    let coeffs: Vec<C64> = (0..space.basis.len())
        .map(|i| if space.basis.label(i).band == Band::Positive { C64::from_polar(1.0, 0.4 * i as f64) } else { C64::from(0.0) })
        .collect();
    let psi = single_particle_state(&space, &coeffs).unwrap();
    let mut h = build_free_hamiltonian(&space);
    h.mark_hermitian(1e-12).unwrap();
    let plan = EvolutionPlan::new(h, Exec::Sequential).unwrap();
    let evo = Evolution::new(&plan, psi).unwrap();
    let spec = EnsembleSpec {
        trajectories: 2000,
        seed: 1,
        t0: 0.0,
        t1: 1.0,
        slices: 2,
        bins: 20,
        integrator: IntegratorSpec::new(0.05),
        mode: EnsembleMode::Deterministic,
        jump_grid: None,
        initial: InitialDistribution::Equilibrium,
    };
    let mut group = c.benchmark_group("ensemble 2000 trajectories");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_ensemble(&space, &evo, None, black_box(&spec), exec).unwrap())
        });
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("variance quadrature bL=1e4 bm=10");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| variance_quadrature(1.0, black_box(1e4), 10.0, 1e-8, exec).unwrap())
        });
    }
    group.finish();
}

fn one_body(c: &mut Criterion) {
    let basis = ModeBasis::build(build_mode_lattice(SpaceDim::One, 2.0 * PI, 3.5).unwrap(), SpeciesTable::single(1.0)).unwrap();
    let space = HilbertSpace::new(basis, 7, BosonSpace::none()).unwrap();
    let w = region_weights(&space.basis, &Region::Interval { a: 0.5, b: 2.5 }).unwrap();
    let mut group = c.benchmark_group("one-body assembly 14 modes n=7");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_one_body_operator(&space, black_box(&w), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble, quadrature, one_body);
criterion_main!(benches);
