//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one line per criterion; exits non-zero if any criterion fails.
//!
//! `cargo test --release -p diracsea --test acceptance`

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use diracsea::checks::{self, CheckReport, CheckSettings, MacroOracleSpec};
use diracsea::dynamics::*;
use diracsea::fluct::*;
use diracsea::fock::*;
use diracsea::modes::{build_mode_lattice, SpaceDim, SpeciesTable};
use diracsea::{Exec, C64};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn run(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Result<Verdict, String>) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let (passed, detail) = match out {
        Ok(v) => (v.passed && elapsed <= budget, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if passed { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] {id}. {name}: {detail} [{:.2} s, budget {} s]",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    passed
}

fn suite_detail(report: &CheckReport) -> String {
    let mut parts = Vec::new();
    for suite in report.suites() {
        if let Some(w) = report.worst(&suite) {
            parts.push(format!("{suite} {:.1e}/{:.0e}", w.value, w.tolerance));
        }
    }
    for o in report.outcomes.iter().filter(|o| !o.upper_bound) {
        parts.push(format!("{} {} {:.2e} > {:.0e}", o.suite, o.case, o.value, o.tolerance));
    }
    for f in report.failures() {
        parts.push(format!("FAILED {} ({})", f.suite, f.case));
    }
    parts.join("; ")
}

fn coefficient() -> Result<Verdict, String> {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut last = 0.0;
    for &bl in &[1e3, 1e4, 1e6] {
        let start = Instant::now();
        let q = variance_quadrature(1.0, bl, 0.0, 1e-8, Exec::Parallel).map_err(|e| e.to_string())?;
        let expect = asymptotic_variance(1.0, bl);
        let rel = ((q.value - expect) / expect).abs();
        ok &= rel < 0.02 && start.elapsed() < Duration::from_secs(10);
        parts.push(format!("bL={bl:.0e} rel {rel:.2e}"));
        last = q.value;
    }
    // 24 species at b = 1, b Lambda = 1e6.
    let b: f64 = 1.0;
    let cutoff: f64 = 1e6;
    let v = 4.0 * PI * b * b * b / 3.0;
    let coeff = (24.0 * last).sqrt() / (cutoff.sqrt() * v.powf(1.0 / 6.0));
    let rel = ((coeff - total_coefficient()) / total_coefficient()).abs();
    ok &= rel < 0.01;
    parts.push(format!("total coefficient {coeff:.5} vs {:.5} (rel {rel:.1e}; quoted 0.39)", total_coefficient()));
    Ok(verdict(ok, parts.join(", ")))
}

fn graphite() -> Result<Verdict, String> {
    let b = distinguishability_radius(4.2e30, 1e35).map_err(|e| e.to_string())?;
    Ok(verdict((2.3e-6..=2.9e-6).contains(&b), format!("b = {b:.4e} m in [2.3e-6, 2.9e-6]")))
}

fn n0_formula_check() -> Result<Verdict, String> {
    let species = SpeciesTable::standard_model(0.1);
    let mut worst: f64 = 0.0;
    for &(cutoff, volume) in &[(1.0, 1.0), (1e35, 1e-18), (3.7e12, 2.5e-30), (2.0, PI * PI)] {
        let spec = FluctuationSpec {
            cutoff,
            region: FluctRegion::Volume { volume },
            species: species.clone(),
            tolerance: 1e-6,
            case: CaseOverride::Auto,
        };
        let got = n0(&spec).map_err(|e| e.to_string())?;
        let expect = 8.0 / (PI * PI) * cutoff * cutoff * cutoff * volume;
        worst = worst.max(((got - expect) / expect).abs());
    }
    Ok(verdict(species.len() == 24 && worst <= 1e-12, format!("24 species, max rel {worst:.1e} <= 1e-12")))
}

fn algebraic() -> Result<Verdict, String> {
    let r = checks::algebraic_suite(&CheckSettings::default(), Exec::Parallel).map_err(|e| e.to_string())?;
    Ok(verdict(r.passed(), suite_detail(&r)))
}

fn position_commutator() -> Result<Verdict, String> {
    let r = checks::position_commutators(&CheckSettings::default(), Exec::Parallel).map_err(|e| e.to_string())?;
    Ok(verdict(r.passed(), suite_detail(&r)))
}

fn equivariance() -> Result<Verdict, String> {
    let e = |err: diracsea::Error| err.to_string();
    let l = 2.0 * PI;
    let cutoff = 2.0 * PI * 2.5 / l;
    let basis = ModeBasis::build(build_mode_lattice(SpaceDim::One, l, cutoff).map_err(e)?, SpeciesTable::single(1.0))
        .map_err(e)?;
    let space = HilbertSpace::new(basis, 1, BosonSpace::none()).map_err(e)?;
    let b = &space.basis;
    let coeffs: Vec<C64> = (0..b.len())
        .map(|i| {
            let lab = b.label(i);
            if lab.band == Band::Positive {
                let n = b.lattice().integer(lab.momentum)[0] as f64;
                C64::from_polar(1.0 + 0.1 * n, 0.3 * n)
            } else {
                C64::from(0.0)
            }
        })
        .collect();
    let modes = coeffs.iter().filter(|c| c.norm() > 0.0).count();
    let psi = single_particle_state(&space, &coeffs).map_err(e)?;
    let mut h = build_free_hamiltonian(&space);
    h.mark_hermitian(1e-12).map_err(e)?;
    let plan = EvolutionPlan::new(h, Exec::Parallel).map_err(e)?;
    // Slowest beat: between |n| = 0 and |n| = 1.
    let beat = 2.0 * PI / ((1.0f64 + 1.0).sqrt() - 1.0);
    let evo = Evolution::new(&plan, psi).map_err(e)?;
    let mut spec = EnsembleSpec {
        trajectories: 20_000,
        seed: 2024,
        t0: 0.0,
        t1: 2.0 * beat,
        slices: 20,
        bins: 50,
        integrator: IntegratorSpec::new(0.05),
        mode: EnsembleMode::Deterministic,
        jump_grid: None,
        initial: InitialDistribution::Equilibrium,
    };
    let (_, good) = run_ensemble(&space, &evo, None, &spec, Exec::Parallel).map_err(e)?;
    spec.initial = InitialDistribution::Uniform;
    spec.t1 = spec.t0;
    spec.slices = 1;
    let (_, bad) = run_ensemble(&space, &evo, None, &spec, Exec::Parallel).map_err(e)?;
    let ok = modes == 5 && good.max_tv() < 0.05 && good.excluded == 0 && bad.tv[0] > 0.3;
    Ok(verdict(
        ok,
        format!(
            "{modes} modes, T = {:.2}, {} slices, max TV {:.4} < 0.05 (noise {:.3}), control TV {:.3} > 0.3",
            2.0 * beat,
            good.tv.len(),
            good.max_tv(),
            good.noise_scale,
            bad.tv[0]
        ),
    ))
}

fn collapse() -> Result<Verdict, String> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, &w) in [0.5, 0.36].iter().enumerate() {
        let start = Instant::now();
        let r = measurement_scenario(&MeasurementSpec::reference(w, 10_000, 77 + k as u64), Exec::Parallel)
            .map_err(|e| e.to_string())?;
        ok &= r.within_three_sigma && start.elapsed() < Duration::from_secs(300);
        parts.push(format!(
            "|c1|^2 = {w}: {:.4} (3 sigma = {:.4}, excluded {}, switched {})",
            r.fraction,
            3.0 * r.sigma,
            r.excluded,
            r.switched
        ));
    }
    Ok(verdict(ok, parts.join("; ")))
}

fn refinement() -> Result<Verdict, String> {
    let r = refinement_study(&RefinementSpec::reference(20_000, 11), Exec::Parallel).map_err(|e| e.to_string())?;
    let tv: Vec<String> = r.levels.iter().map(|l| format!("{} sites {:.4}", l.sites, l.tv)).collect();
    Ok(verdict(r.monotone && r.levels.len() == 3, format!("TV: {}", tv.join(", "))))
}

fn macro_state() -> Result<Verdict, String> {
    let o = checks::macro_state_oracle(&MacroOracleSpec::default(), Exec::Parallel).map_err(|e| e.to_string())?;
    let ok = o.mean_error() < 0.05 && o.stddev_error() < 0.05;
    Ok(verdict(
        ok,
        format!(
            "<F(B)> = {:.4} vs m + n0 = {:.4} (rel {:.3}); stddev {:.4} vs {:.4} (rel {:.3}); {} states",
            o.excited_mean,
            o.predicted_mean,
            o.mean_error(),
            o.excited_stddev,
            o.predicted_stddev,
            o.stddev_error(),
            o.states
        ),
    ))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run(1, "vacuum variance coefficient", secs(30), coefficient),
        run(2, "graphite threshold", secs(1), graphite),
        run(3, "n0 formula", secs(1), n0_formula_check),
        run(4, "algebraic suite", secs(60), algebraic),
        run(5, "position measure vs interaction", secs(30), position_commutator),
        run(6, "equivariance", secs(300), equivariance),
        run(7, "effective collapse", secs(600), collapse),
        run(8, "jump-process continuum trend", secs(600), refinement),
        run(9, "macroscopic state oracle", secs(120), macro_state),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
