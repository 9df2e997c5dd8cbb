//! Two-branch pointer scenario: a superposition `c1 psi1 + c2 psi2` of
//! packets with (nearly) disjoint supports. Trajectories started in
//! equilibrium end up in one branch with frequency `|c_k|^2`, after which
//! the other branch no longer affects their motion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::ensemble::{run_ensemble, EnsembleMode, EnsembleSpec, InitialDistribution};
use crate::dynamics::evolution::{Evolution, EvolutionPlan};
use crate::dynamics::integrate::IntegratorSpec;
use crate::error::{invalid, Error, Result};
use crate::fock::{build_free_hamiltonian, single_particle_state, Band, BosonSpace, HilbertSpace, ModeBasis, QuantumState};
use crate::modes::{build_mode_lattice, SpaceDim, SpeciesTable};
use crate::position::WaveField;
use crate::{Exec, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub box_len: f64,
    /// Largest mode index `K`; momenta `2 pi n / L` with `|n| <= K`.
    pub max_mode: i64,
    pub mass: f64,
    /// Packet width (standard deviation of `|psi|^2`).
    pub width: f64,
    pub centers: [f64; 2],
    /// `|c1|^2`.
    pub weight: f64,
    /// Relative phase of `c2`.
    #[serde(default)]
    pub phase: f64,
    pub duration: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub step: f64,
    /// Largest admissible branch overlap `int |psi1| |psi2| dx`.
    #[serde(default = "default_overlap")]
    pub overlap_threshold: f64,
}

fn default_overlap() -> f64 {
    1e-3
}

impl MeasurementSpec {
    /// The reference scenario: `L = 20`, `K = 12`, `m = 5`, unit-width
    /// packets at `L/4` and `3L/4`.
    pub fn reference(weight: f64, trajectories: usize, seed: u64) -> Self {
        MeasurementSpec {
            box_len: 20.0,
            max_mode: 12,
            mass: 5.0,
            width: 1.0,
            centers: [5.0, 15.0],
            weight,
            phase: 0.0,
            duration: 2.0,
            trajectories,
            seed,
            step: 0.05,
            overlap_threshold: 1e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(invalid("branch weight must lie in [0, 1]"));
        }
        if !(self.box_len > 0.0 && self.width > 0.0 && self.mass >= 0.0 && self.max_mode >= 1) {
            return Err(invalid("box length, width and cut-off must be positive"));
        }
        if self.trajectories == 0 || !(self.duration >= 0.0) {
            return Err(invalid("need at least one trajectory and a non-negative duration"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub weight: f64,
    pub trajectories: usize,
    pub excluded: usize,
    /// Trajectories attributed to each branch at the final time.
    pub occupancy: [usize; 2],
    pub fraction: f64,
    /// Binomial standard deviation `sqrt(w (1 - w) / N)`.
    pub sigma: f64,
    /// Trajectories whose branch at the end differs from the start.
    pub switched: usize,
    pub overlap: f64,
    pub within_three_sigma: bool,
}

/// Positive-band packet in the one-fermion sector:
/// `c_p ~ exp(-width^2 (p - k0)^2 - i p center)`.
pub fn packet_state(space: &HilbertSpace, center: &[f64], width: f64, k0: &[f64]) -> Result<QuantumState> {
    let basis = &space.basis;
    let d = basis.lattice().dim().get();
    let coeffs: Vec<C64> = (0..basis.len())
        .map(|i| {
            if basis.label(i).band != Band::Positive || basis.label(i).species != 0 {
                return C64::from(0.0);
            }
            let p = basis.momentum(i);
            let q2: f64 = (0..d).map(|a| (p[a] - k0[a]).powi(2)).sum();
            let phase: f64 = (0..d).map(|a| p[a] * center[a]).sum();
            C64::from_polar((-width * width * q2).exp(), -phase)
        })
        .collect();
    single_particle_state(space, &coeffs)
}

/// `int |psi1| |psi2| dx` on a fine grid (one fermion, d = 1).
pub fn branch_overlap(space: &HilbertSpace, a: &QuantumState, b: &QuantumState) -> Result<f64> {
    let fa = WaveField::new(space, a.amplitudes())?;
    let fb = WaveField::new(space, b.amplitudes())?;
    let l = space.basis.lattice().box_len();
    let points = (16 * space.basis.lattice().max_integer() as usize).max(512);
    let mut acc = 0.0;
    for k in 0..points {
        let x = [k as f64 * l / points as f64];
        acc += (fa.amplitude(&x)?.density() * fb.amplitude(&x)?.density()).sqrt();
    }
    Ok(acc * l / points as f64)
}

/// Runs the scenario and attributes every trajectory to the branch with
/// the larger weighted density `|c_k|^2 rho_k(x)` at the final time.
pub fn measurement_scenario(spec: &MeasurementSpec, exec: Exec) -> Result<BranchReport> {
    spec.validate()?;
    let cutoff = 2.0 * PI * (spec.max_mode as f64 + 0.5) / spec.box_len;
    let lat = build_mode_lattice(SpaceDim::One, spec.box_len, cutoff)?;
    let basis = ModeBasis::build(lat, SpeciesTable::single(spec.mass))?;
    let space = HilbertSpace::new(basis, 1, BosonSpace::none())?;
    let b1 = packet_state(&space, &[spec.centers[0]], spec.width, &[0.0])?;
    let b2 = packet_state(&space, &[spec.centers[1]], spec.width, &[0.0])?;
    let overlap = branch_overlap(&space, &b1, &b2)?;
    if overlap > spec.overlap_threshold {
        return Err(Error::BranchOverlap(overlap));
    }
    let c1 = spec.weight.sqrt();
    let c2 = C64::from_polar((1.0 - spec.weight).sqrt(), spec.phase);
    let amps: Vec<C64> =
        b1.amplitudes().iter().zip(b2.amplitudes()).map(|(x, y)| x * c1 + y * c2).collect();
    let psi = QuantumState::normalized(amps, 0.0)?;

    let mut h = build_free_hamiltonian(&space);
    h.mark_hermitian(1e-12)?;
    let plan = EvolutionPlan::new(h, exec)?;
    let schedule = Evolution::new(&plan, psi)?;
    let ens = EnsembleSpec {
        trajectories: spec.trajectories,
        seed: spec.seed,
        t0: 0.0,
        t1: spec.duration,
        slices: 1,
        bins: 50,
        integrator: IntegratorSpec::new(spec.step),
        mode: EnsembleMode::Deterministic,
        jump_grid: None,
        initial: InitialDistribution::Equilibrium,
    };
    let (set, _) = run_ensemble(&space, &schedule, None, &ens, exec)?;

    let e1 = [plan.evolve(&b1, 0.0)?, plan.evolve(&b1, spec.duration)?];
    let e2 = [plan.evolve(&b2, 0.0)?, plan.evolve(&b2, spec.duration)?];
    let f1 = [WaveField::new(&space, e1[0].amplitudes())?, WaveField::new(&space, e1[1].amplitudes())?];
    let f2 = [WaveField::new(&space, e2[0].amplitudes())?, WaveField::new(&space, e2[1].amplitudes())?];
    let classify = |slot: usize, x: &[f64]| -> Result<usize> {
        let r1 = f1[slot].amplitude(x)?.density() * spec.weight;
        let r2 = f2[slot].amplitude(x)?.density() * (1.0 - spec.weight);
        Ok(if r1 >= r2 { 0 } else { 1 })
    };
    let last = set.configurations.len() - 1;
    let mut occupancy = [0usize; 2];
    let mut switched = 0;
    for id in 0..set.len() {
        if set.aborted[id] {
            continue;
        }
        let start = classify(0, &set.configurations[0][id])?;
        let end = classify(1, &set.configurations[last][id])?;
        occupancy[end] += 1;
        if start != end {
            switched += 1;
        }
    }
    let valid = occupancy[0] + occupancy[1];
    let fraction = occupancy[0] as f64 / valid.max(1) as f64;
    let sigma = (spec.weight * (1.0 - spec.weight) / valid.max(1) as f64).sqrt();
    let within = if sigma > 0.0 { (fraction - spec.weight).abs() <= 3.0 * sigma } else { fraction == spec.weight };
    Ok(BranchReport {
        weight: spec.weight,
        trajectories: spec.trajectories,
        excluded: set.aborted_count(),
        occupancy,
        fraction,
        sigma,
        switched,
        overlap,
        within_three_sigma: within,
    })
}
