//! Invariant suite behind `diracsea check`.
//!
//! Every check records the measured deviation next to its tolerance. The
//! systems are all lattices with at most `max_modes` single-particle modes,
//! and every fermion-number sector of each is visited.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{
    apply_ladder_combination, build_hamiltonian, build_interaction, build_one_body_operator, commutator_norm,
    fermion_number_operator, full_fock_creation, grid_point_weights, region_weights, BosonSpace, FockSector,
    HilbertSpace, InteractionKernel, KernelKind, KernelQuadrature, ModeBasis, OperatorMatrix, QuantumState, Region,
    SpatialProfile,
};
use crate::modes::{build_mode_lattice, delta_cutoff, SpaceDim, Species, SpeciesTable};
use crate::position::{PilotField, WaveField};
use crate::{Exec, CMat, C64};

pub const ANTICOMMUTATOR_TOL: f64 = 1e-14;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const CONSERVATION_TOL: f64 = 1e-12;
pub const ANTISYMMETRY_TOL: f64 = 1e-12;
/// Additivity holds up to the rounding of one addition per matrix entry.
pub const ADDITIVITY_TOL: f64 = 1e-13;
pub const OVERLAP_TOL: f64 = 1e-10;
pub const COMMUTING_TOL: f64 = 1e-12;
pub const TRUNCATED_MIN: f64 = 1e-6;
pub const SOURCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSettings {
    pub max_modes: usize,
    pub boson_dim: usize,
    pub coupling: f64,
    pub omega: f64,
    pub seed: u64,
    /// Largest fermion number for the position-space checks.
    pub max_position_fermions: usize,
}

impl Default for CheckSettings {
    fn default() -> Self {
        CheckSettings { max_modes: 12, boson_dim: 2, coupling: 0.7, omega: 1.0, seed: 1, max_position_fermions: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub suite: String,
    pub case: String,
    pub value: f64,
    pub tolerance: f64,
    /// `false` for checks that require `value > tolerance`.
    pub upper_bound: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub outcomes: Vec<Outcome>,
}

impl CheckReport {
    fn below(&mut self, suite: &str, case: String, value: f64, tolerance: f64) {
        let passed = value <= tolerance;
        self.outcomes.push(Outcome { suite: suite.into(), case, value, tolerance, upper_bound: true, passed });
    }

    fn above(&mut self, suite: &str, case: String, value: f64, bound: f64) {
        let passed = value > bound;
        self.outcomes.push(Outcome { suite: suite.into(), case, value, tolerance: bound, upper_bound: false, passed });
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.outcomes.extend(other.outcomes);
    }

    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }

    /// Names of the suites, in first-seen order.
    pub fn suites(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for o in &self.outcomes {
            if !out.contains(&o.suite) {
                out.push(o.suite.clone());
            }
        }
        out
    }

    /// Largest deviation among the upper-bound checks of `suite`.
    pub fn worst(&self, suite: &str) -> Option<&Outcome> {
        self.outcomes
            .iter()
            .filter(|o| o.suite == suite && o.upper_bound)
            .max_by(|a, b| a.value.total_cmp(&b.value))
    }
}

fn max_abs(op: &OperatorMatrix) -> f64 {
    op.raw_parts().2.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn species(n: usize) -> SpeciesTable {
    let all = [("f0", 1.0, -1.0), ("f1", 0.4, 2.0 / 3.0), ("f2", 2.3, 0.0)];
    SpeciesTable::new(all[..n].iter().map(|&(id, mass, charge)| Species { id: id.into(), mass, charge }).collect())
        .expect("valid species")
}

/// Small systems with at most `max_modes` single-particle modes.
pub fn small_systems(max_modes: usize) -> Result<Vec<(String, ModeBasis)>> {
    let l = 2.0 * PI;
    let mut out = Vec::new();
    for ns in 1..=3 {
        for &(dim, cutoff) in &[(SpaceDim::One, 0.5), (SpaceDim::One, 1.5), (SpaceDim::One, 2.5), (SpaceDim::Three, 0.5)] {
            let basis = ModeBasis::build(build_mode_lattice(dim, l, cutoff)?, species(ns))?;
            if basis.len() <= max_modes {
                out.push((format!("d={} species={} cutoff={} modes={}", dim.get(), ns, cutoff, basis.len()), basis));
            }
        }
    }
    Ok(out)
}

fn kernels(basis: &ModeBasis, coupling: f64) -> Vec<(&'static str, InteractionKernel)> {
    let mut out = vec![
        ("yukawa-cos", InteractionKernel::yukawa(coupling).with_profile(SpatialProfile::Cosine { harmonic: 1 })),
        (
            "em-like",
            InteractionKernel {
                kind: KernelKind::EmLike,
                coupling,
                profile: SpatialProfile::Uniform,
                quadrature: KernelQuadrature::Exact,
            },
        ),
    ];
    if basis.species().len() >= 2 {
        out.push((
            "flavor-flip",
            InteractionKernel {
                kind: KernelKind::FlavorFlip { first: 0, second: 1 },
                coupling,
                profile: SpatialProfile::Cosine { harmonic: 1 },
                quadrature: KernelQuadrature::Exact,
            },
        ));
    }
    out
}

fn regions(dim: SpaceDim) -> Vec<Region> {
    match dim {
        SpaceDim::One => vec![Region::Interval { a: 0.3, b: 2.9 }, Region::Interval { a: -1.0, b: 4.5 }],
        SpaceDim::Three => vec![
            Region::Cuboid { lo: [0.0, 0.5, 1.0], hi: [2.0, 3.0, 4.0] },
            Region::Ball { center: [1.0, 2.0, 3.0], radius: 1.7 },
        ],
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Result<QuantumState> {
    QuantumState::normalized(random_vector(rng, n), 0.0)
}

/// `{a_i, a_j^dagger} = delta_ij` and `{a_i, a_j} = 0` on the full Fock
/// space of `1..=max_modes` modes.
pub fn anticommutators(max_modes: usize, exec: Exec) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    for total in 1..=max_modes {
        let dim = 1usize << total;
        let create: Vec<OperatorMatrix> = (0..total).map(|i| full_fock_creation(i, total)).collect::<Result<_>>()?;
        let destroy: Vec<OperatorMatrix> = create.iter().map(OperatorMatrix::adjoint).collect();
        let id = OperatorMatrix::identity(dim);
        let mut worst: f64 = 0.0;
        for i in 0..total {
            for j in 0..total {
                let mixed = destroy[i].matmul(&create[j], exec)?.add(&create[j].matmul(&destroy[i], exec)?)?;
                let target = if i == j { mixed.add_scaled(&id, C64::from(-1.0))? } else { mixed };
                worst = worst.max(max_abs(&target));
                let same = destroy[i].matmul(&destroy[j], exec)?.add(&destroy[j].matmul(&destroy[i], exec)?)?;
                worst = worst.max(max_abs(&same));
            }
        }
        report.below("anticommutators", format!("modes={total}"), worst, ANTICOMMUTATOR_TOL);
    }
    Ok(report)
}

/// Hermiticity, fermion-number conservation and `F_d(B)` additivity on
/// every sector of `basis`.
pub fn sector_operators(label: &str, basis: &ModeBasis, settings: &CheckSettings, exec: Exec) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let boson = BosonSpace::new(settings.boson_dim)?;
    let kernels = kernels(basis, settings.coupling);
    let region_w: Vec<(CMat, CMat)> = regions(basis.lattice().dim())
        .into_iter()
        .map(|r| Ok((region_weights(basis, &r)?, region_weights(basis, &r.complement())?)))
        .collect::<Result<_>>()?;
    for n in 0..=basis.len() {
        let space = HilbertSpace::new(basis.clone(), n, boson)?;
        let f = fermion_number_operator(&space, exec)?;
        let n_id = OperatorMatrix::identity(space.dim()).scale(C64::from(n as f64));
        let f_dev = max_abs(&f.add_scaled(&n_id, C64::from(-1.0))?);
        report.below("fermion-number", format!("{label} n={n}"), f_dev, CONSERVATION_TOL);
        let mut herm: f64 = 0.0;
        let mut comm: f64 = 0.0;
        for (_, k) in &kernels {
            let h = build_hamiltonian(&space, Some(k), settings.omega, exec)?;
            herm = herm.max(h.hermiticity_error());
            comm = comm.max(commutator_norm(&f, &h, exec)?);
        }
        report.below("hermiticity", format!("{label} n={n}"), herm, HERMITIAN_TOL);
        report.below("conservation", format!("{label} n={n}"), comm, CONSERVATION_TOL);
        let mut add: f64 = 0.0;
        for (w, wc) in &region_w {
            let fb = build_one_body_operator(&space, w, exec)?;
            let fc = build_one_body_operator(&space, wc, exec)?;
            add = add.max(max_abs(&fb.add(&fc)?.add_scaled(&f, C64::from(-1.0))?));
        }
        report.below("additivity", format!("{label} n={n}"), add, ADDITIVITY_TOL);
    }
    Ok(report)
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, l: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>() * l).collect()
}

/// Exchange antisymmetry of the position amplitude for `2 <= n <= max_n`.
pub fn antisymmetry(label: &str, basis: &ModeBasis, settings: &CheckSettings, rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let d = basis.lattice().dim().get();
    let l = basis.lattice().box_len();
    let nc = basis.components();
    let boson = BosonSpace::new(settings.boson_dim)?;
    for n in 2..=settings.max_position_fermions.min(basis.len()) {
        let space = HilbertSpace::new(basis.clone(), n, boson)?;
        let state = random_state(rng, space.dim())?;
        let field = WaveField::new(&space, state.amplitudes())?;
        let x: Vec<f64> = (0..n).flat_map(|_| random_point(rng, d, l)).collect();
        let a = field.amplitude(&x)?;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let mut y = x.clone();
                for c in 0..d {
                    y.swap(i * d + c, j * d + c);
                }
                let b = field.amplitude(&y)?;
                for flat in 0..nc.pow(n as u32) {
                    let comps: Vec<usize> = (0..n).map(|k| flat / nc.pow(k as u32) % nc).collect();
                    let mut swapped = comps.clone();
                    swapped.swap(i, j);
                    for xi in 0..space.boson.dim() {
                        worst = worst.max((a.values[a.index(&comps, xi)] + b.values[b.index(&swapped, xi)]).norm());
                    }
                }
            }
        }
        report.below("antisymmetry", format!("{label} n={n}"), worst, ANTISYMMETRY_TOL);
    }
    Ok(report)
}

fn det(m: &CMat) -> C64 {
    m.clone().determinant()
}

/// `|x_1 a_1, ..., x_n a_n> = psi_{a_n}^dagger(x_n) ... psi_{a_1}^dagger(x_1) |0> / sqrt(n!)`.
fn position_state(basis: &ModeBasis, points: &[(Vec<f64>, usize)]) -> Result<Vec<C64>> {
    let total = basis.len();
    let nc = basis.components();
    let mut v = vec![C64::from(1.0)];
    let mut fact = 1.0;
    for (k, (x, a)) in points.iter().enumerate() {
        let modes = basis.mode_values(x);
        let coeffs: Vec<C64> = (0..total).map(|i| modes[i * nc + a].conj()).collect();
        let from = FockSector::new(total, k, 1)?;
        let to = FockSector::new(total, k + 1, 1)?;
        v = apply_ladder_combination(&coeffs, true, &from, &to, 1, &v)?;
        fact *= (k + 1) as f64;
    }
    let s = 1.0 / fact.sqrt();
    Ok(v.into_iter().map(|z| z * s).collect())
}

/// Overlaps of field-operator position states against the antisymmetrised
/// product of band-limited delta functions, `det[delta_ab delta(x_i - y_j)] / n!`.
pub fn position_overlaps(label: &str, basis: &ModeBasis, settings: &CheckSettings, rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let d = basis.lattice().dim().get();
    let l = basis.lattice().box_len();
    let nc = basis.components();
    let sd = basis.spinor_dim();
    for n in 1..=settings.max_position_fermions.min(basis.len()) {
        let mut worst: f64 = 0.0;
        for trial in 0..4 {
            let xs: Vec<(Vec<f64>, usize)> =
                (0..n).map(|_| (random_point(rng, d, l), rng.random_range(0..nc))).collect();
            // Half of the trials reuse points so that the overlaps are O(1).
            let ys: Vec<(Vec<f64>, usize)> = if trial % 2 == 0 {
                let mut ys = xs.clone();
                ys.rotate_left(1);
                ys
            } else {
                (0..n).map(|_| (random_point(rng, d, l), rng.random_range(0..nc))).collect()
            };
            let u = position_state(basis, &xs)?;
            let v = position_state(basis, &ys)?;
            let direct: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            let mut m = CMat::zeros(n, n);
            let mut fact = 1.0;
            for i in 0..n {
                fact *= (i + 1) as f64;
                for j in 0..n {
                    let (x, a) = &xs[i];
                    let (y, b) = &ys[j];
                    if a / sd == b / sd && a % sd == b % sd {
                        let diff: Vec<f64> = (0..d).map(|c| x[c] - y[c]).collect();
                        m[(i, j)] = C64::from(delta_cutoff(&diff, basis.lattice()));
                    }
                }
            }
            let formula = det(&m) / fact;
            worst = worst.max((direct - formula).norm());
        }
        report.below("overlap-formula", format!("{label} n={n}"), worst, OVERLAP_TOL);
    }
    Ok(report)
}

/// Position-diagonal one-body operator against a position-diagonal
/// interaction, with the modes resolving every grid point and with modes
/// truncated below the grid Nyquist limit; plus the grid sum of `g`.
pub fn position_commutators(settings: &CheckSettings, exec: Exec) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0xa5a5);
    let l = 2.0 * PI;
    let points = 9;
    let boson = BosonSpace::new(settings.boson_dim.max(2))?;
    let kernel = InteractionKernel::yukawa(settings.coupling)
        .with_profile(SpatialProfile::Cosine { harmonic: 1 })
        .with_quadrature(KernelQuadrature::Grid { points });
    for (name, cutoff) in [("full", 4.5), ("truncated", 2.5)] {
        let basis = ModeBasis::build(build_mode_lattice(SpaceDim::One, l, cutoff)?, SpeciesTable::single(1.0))?;
        let m = basis.len();
        let mut w = CMat::zeros(m, m);
        for g in 0..points {
            w += grid_point_weights(&basis, points, &[g]) * C64::from(rng.random::<f64>());
        }
        let mut comm: f64 = 0.0;
        for n in 1..=2 {
            let space = HilbertSpace::new(basis.clone(), n, boson)?;
            let a = build_one_body_operator(&space, &w, exec)?;
            let h = build_interaction(&space, &kernel, exec)?;
            comm = comm.max(commutator_norm(&a, &h, exec)?);
        }
        let space = HilbertSpace::new(basis.clone(), 1, boson)?;
        let h = build_interaction(&space, &kernel, exec)?;
        let state = random_state(&mut rng, space.dim())?;
        let field = PilotField::new(&space, &state, Some(&h), exec)?;
        let g: Vec<f64> =
            (0..points).map(|k| field.g_term(&[k as f64 * l / points as f64])).collect::<Result<_>>()?;
        let sum = g.iter().sum::<f64>() * l / points as f64;
        if name == "full" {
            report.below("position-commutator", format!("{name} modes={m}"), comm, COMMUTING_TOL);
            let gmax = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            report.below("source-term", format!("{name} max |g| on grid"), gmax, SOURCE_TOL);
        } else {
            report.above("position-commutator", format!("{name} modes={m}"), comm, TRUNCATED_MIN);
        }
        report.below("source-term", format!("{name} grid sum"), sum.abs(), SOURCE_TOL);
    }
    Ok(report)
}

/// Sea plus one localized positive-energy packet on a small d = 1 lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroOracleSpec {
    pub box_len: f64,
    pub max_mode: i64,
    pub mass: f64,
    pub width: f64,
    pub center: f64,
    /// `B = [center - half_width, center + half_width]`.
    pub half_width: f64,
}

impl Default for MacroOracleSpec {
    fn default() -> Self {
        MacroOracleSpec { box_len: 12.0, max_mode: 4, mass: 1.0, width: 1.2, center: 6.0, half_width: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroOracle {
    pub states: usize,
    /// Sea population of `B`: negative modes times `|B| / L`.
    pub n0: f64,
    pub vacuum_mean: f64,
    pub vacuum_stddev: f64,
    pub excited_mean: f64,
    pub excited_stddev: f64,
    /// `(m + n0, Delta_0)` from the macroscopic formulas with `m = 1`.
    pub predicted_mean: f64,
    pub predicted_stddev: f64,
}

impl MacroOracle {
    /// Relative deviation of the excitation count `<F(B)> - n0` from one.
    pub fn mean_error(&self) -> f64 {
        ((self.excited_mean - self.predicted_mean) / (self.predicted_mean - self.n0)).abs()
    }

    pub fn stddev_error(&self) -> f64 {
        ((self.excited_stddev - self.predicted_stddev) / self.predicted_stddev).abs()
    }
}

/// Mean and standard deviation of `F(B)` in the exact Fock state
/// `c^dagger(packet) |sea>`, evaluated matrix-free.
pub fn macro_state_oracle(spec: &MacroOracleSpec, exec: Exec) -> Result<MacroOracle> {
    use crate::dynamics::packet_state;
    use crate::fock::{apply_one_body, dirac_sea_state};
    let cutoff = 2.0 * PI * (spec.max_mode as f64 + 0.5) / spec.box_len;
    let basis = ModeBasis::build(build_mode_lattice(SpaceDim::One, spec.box_len, cutoff)?, SpeciesTable::single(spec.mass))?;
    let region = Region::Interval { a: spec.center - spec.half_width, b: spec.center + spec.half_width };
    let w = region_weights(&basis, &region)?;
    let one = HilbertSpace::new(basis.clone(), 1, BosonSpace::none())?;
    let coeffs = packet_state(&one, &[spec.center], spec.width, &[0.0])?.into_amplitudes();

    let sea_n = basis.sea_mask().count_ones() as usize;
    let sea_space = HilbertSpace::new(basis.clone(), sea_n, BosonSpace::none())?;
    let sea = dirac_sea_state(&sea_space)?;
    let exc_space = HilbertSpace::new(basis.clone(), sea_n + 1, BosonSpace::none())?;
    let excited = QuantumState::normalized(
        apply_ladder_combination(&coeffs, true, &sea_space.sector, &exc_space.sector, 1, sea.amplitudes())?,
        0.0,
    )?;
    let moments = |space: &HilbertSpace, psi: &[C64]| -> Result<(f64, f64)> {
        let wpsi = apply_one_body(&space.sector, 1, &w, None, psi, exec)?;
        let mean: f64 = psi.iter().zip(&wpsi).map(|(a, b)| (a.conj() * b).re).sum();
        let second: f64 = wpsi.iter().map(|z| z.norm_sqr()).sum();
        Ok((mean, (second - mean * mean).max(0.0).sqrt()))
    };
    let (vacuum_mean, vacuum_stddev) = moments(&sea_space, sea.amplitudes())?;
    let (excited_mean, excited_stddev) = moments(&exc_space, excited.amplitudes())?;
    let n0 = sea_n as f64 * 2.0 * spec.half_width / spec.box_len;
    let (predicted_mean, predicted_stddev) = crate::fluct::macro_statistics(n0, vacuum_stddev, 1.0, true)?;
    Ok(MacroOracle {
        states: exc_space.dim(),
        n0,
        vacuum_mean,
        vacuum_stddev,
        excited_mean,
        excited_stddev,
        predicted_mean,
        predicted_stddev,
    })
}

pub const MACRO_TOL: f64 = 0.05;

pub fn macro_state_checks(spec: &MacroOracleSpec, exec: Exec) -> Result<CheckReport> {
    let o = macro_state_oracle(spec, exec)?;
    let mut report = CheckReport::default();
    report.below("macro-state", "sea mean vs n0".into(), ((o.vacuum_mean - o.n0) / o.n0).abs(), 1e-12);
    report.below("macro-state", "excited mean vs m + n0".into(), o.mean_error(), MACRO_TOL);
    report.below("macro-state", "excited stddev vs vacuum".into(), o.stddev_error(), MACRO_TOL);
    Ok(report)
}

/// The algebraic suite over all small systems.
pub fn algebraic_suite(settings: &CheckSettings, exec: Exec) -> Result<CheckReport> {
    let mut report = anticommutators(settings.max_modes, exec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for (label, basis) in small_systems(settings.max_modes)? {
        report.merge(sector_operators(&label, &basis, settings, exec)?);
        report.merge(antisymmetry(&label, &basis, settings, &mut rng)?);
        report.merge(position_overlaps(&label, &basis, settings, &mut rng)?);
    }
    Ok(report)
}

/// Everything `diracsea check` runs.
pub fn run_all(settings: &CheckSettings, exec: Exec) -> Result<CheckReport> {
    let mut report = algebraic_suite(settings, exec)?;
    report.merge(position_commutators(settings, exec)?);
    report.merge(macro_state_checks(&MacroOracleSpec::default(), exec)?);
    Ok(report)
}
