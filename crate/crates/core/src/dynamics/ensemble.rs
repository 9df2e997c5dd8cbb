//! Ensembles of beable trajectories and equilibrium statistics.
//!
//! Every trajectory owns a ChaCha8 stream `set_stream(id)` split from the
//! master seed, so a run is bit-reproducible and independent of the worker
//! count. Trajectories advance in lockstep so that the three frames of an
//! RK4 step are built once and shared read-only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::evolution::StateSchedule;
use crate::dynamics::integrate::{Flow, IntegratorSpec, JumpEvent, Step};
use crate::dynamics::jump::{HybridJumps, MAX_RATE_STEP};
use crate::error::{invalid, Error, Result};
use crate::fock::{apply_one_body, region_weights, HilbertSpace, InteractionKernel, OperatorMatrix, QuantumState, Region};
use crate::modes::SpaceDim;
use crate::position::PilotField;
use crate::{CMat, Exec};

/// Largest coarse grid used to bound the density for rejection sampling.
pub const ENVELOPE_POINTS: usize = 200_000;
/// Safety factor on the coarse-grid maximum.
pub const ENVELOPE_FACTOR: f64 = 1.2;
/// Smallest acceptable rejection efficiency.
pub const MIN_EFFICIENCY: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleMode {
    #[default]
    Deterministic,
    Jump,
}

/// Initial distribution of configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialDistribution {
    #[default]
    Equilibrium,
    /// Uniform on the box: a deliberately wrong start.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub trajectories: usize,
    pub seed: u64,
    pub t0: f64,
    pub t1: f64,
    /// Number of report intervals; configurations are stored at
    /// `slices + 1` equally spaced times.
    pub slices: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub integrator: IntegratorSpec,
    pub mode: EnsembleMode,
    /// Jump target grid points per axis (jump mode with an interaction).
    #[serde(default)]
    pub jump_grid: Option<usize>,
    #[serde(default)]
    pub initial: InitialDistribution,
}

fn default_bins() -> usize {
    50
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        if self.trajectories == 0 || self.slices == 0 || self.bins == 0 {
            return Err(invalid("trajectories, slices and bins must be positive"));
        }
        if !(self.t0.is_finite() && self.t1.is_finite()) {
            return Err(invalid("time window must be finite"));
        }
        Ok(())
    }
}

/// Interaction attached to a run: the kernel and its assembled operator.
#[derive(Clone, Copy)]
pub struct Interaction<'a> {
    pub kernel: &'a InteractionKernel,
    pub operator: &'a OperatorMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySet {
    pub seed: u64,
    pub integrator: IntegratorSpec,
    pub mode: EnsembleMode,
    pub times: Vec<f64>,
    /// `configurations[slice][trajectory]`, wrapped into the box.
    pub configurations: Vec<Vec<Vec<f64>>>,
    /// Unwrapped displacement from the start, per trajectory.
    pub displacement: Vec<Vec<f64>>,
    pub aborted: Vec<bool>,
    pub jumps: Vec<JumpEvent>,
}

impl TrajectorySet {
    pub fn len(&self) -> usize {
        self.aborted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aborted.is_empty()
    }

    pub fn aborted_count(&self) -> usize {
        self.aborted.iter().filter(|a| **a).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub bins: usize,
    pub times: Vec<f64>,
    /// Total-variation distance per time slice.
    pub tv: Vec<f64>,
    /// Trajectories excluded because they were aborted.
    pub excluded: usize,
    /// `sqrt(bins / N)`, the scale of pure sampling noise.
    pub noise_scale: f64,
}

impl EquilibriumReport {
    pub fn max_tv(&self) -> f64 {
        self.tv.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-trajectory random stream.
pub fn trajectory_rng(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

/// Bound on `rho` for rejection sampling: maximum over a coarse grid of at
/// most [`ENVELOPE_POINTS`] configurations, times [`ENVELOPE_FACTOR`].
pub fn density_envelope(field: &PilotField, exec: Exec) -> Result<f64> {
    let space = field.space();
    let lat = space.basis.lattice();
    let dims = space.fermion_number() * lat.dim().get();
    let per_axis = ((ENVELOPE_POINTS as f64).powf(1.0 / dims as f64).floor() as usize).max(2);
    let total = per_axis.pow(dims as u32);
    let l = lat.box_len();
    // A half-cell offset keeps the grid off coincident-particle planes.
    let vals = exec.map_range(total, |idx| {
        let mut r = idx;
        let mut x = vec![0.0; dims];
        for a in (0..dims).rev() {
            x[a] = ((r % per_axis) as f64 + 0.5 * (a as f64 + 1.0) / dims as f64) * l / per_axis as f64;
            r /= per_axis;
        }
        field.density(&x)
    });
    let mut m = 0.0f64;
    for v in vals {
        m = m.max(v?);
    }
    Ok(m * ENVELOPE_FACTOR)
}

/// Draws one configuration from `rho` by rejection against `envelope`.
/// Should a draw exceed the envelope, the envelope is doubled and the
/// sampling restarts, so the result is exact in distribution.
pub fn sample_configuration<R: Rng>(field: &PilotField, envelope: f64, rng: &mut R) -> Result<Vec<f64>> {
    let space = field.space();
    let lat = space.basis.lattice();
    let dims = space.fermion_number() * lat.dim().get();
    let l = lat.box_len();
    let mut env = envelope;
    loop {
        let x: Vec<f64> = (0..dims).map(|_| rng.random::<f64>() * l).collect();
        let rho = field.density(&x)?;
        if rho > env {
            env *= 2.0;
            continue;
        }
        if rng.random::<f64>() * env < rho && rho > field.node_floor() {
            return Ok(x);
        }
    }
}

/// Samples `count` configurations from `rho^psi`, one stream per sample.
pub fn sample_configurations(field: &PilotField, count: usize, seed: u64, exec: Exec) -> Result<Vec<Vec<f64>>> {
    let envelope = density_envelope(field, exec)?;
    check_efficiency(field, envelope)?;
    exec.map_range(count, |id| sample_configuration(field, envelope, &mut trajectory_rng(seed, id)))
        .into_iter()
        .collect()
}

fn check_efficiency(field: &PilotField, envelope: f64) -> Result<()> {
    let space = field.space();
    let vol = space.basis.lattice().volume().powi(space.fermion_number() as i32);
    let efficiency = 1.0 / (envelope * vol);
    if efficiency < MIN_EFFICIENCY {
        return Err(Error::SamplingEfficiency { efficiency, envelope });
    }
    Ok(())
}

/// Exact probabilities of the slabs `[k L/bins, (k+1) L/bins)` along axis 0
/// for one particle, `<F_d(slab)> / n`.
pub fn slab_probabilities(space: &HilbertSpace, weights: &[CMat], state: &QuantumState, exec: Exec) -> Result<Vec<f64>> {
    let n = space.fermion_number() as f64;
    let psi = state.amplitudes();
    weights
        .iter()
        .map(|w| {
            let y = apply_one_body(&space.sector, space.boson.dim(), w, None, psi, exec)?;
            Ok(crate::fock::state::inner(psi, &y).re / n)
        })
        .collect()
}

/// One-body weights of the axis-0 slabs.
pub fn slab_weights(space: &HilbertSpace, bins: usize) -> Result<Vec<CMat>> {
    let lat = space.basis.lattice();
    let l = lat.box_len();
    (0..bins)
        .map(|k| {
            let a = k as f64 * l / bins as f64;
            let b = (k + 1) as f64 * l / bins as f64;
            let region = match lat.dim() {
                SpaceDim::One => Region::Interval { a, b },
                SpaceDim::Three => Region::Cuboid { lo: [a, 0.0, 0.0], hi: [b, l, l] },
            };
            region_weights(&space.basis, &region)
        })
        .collect()
}

/// Histogram of the axis-0 coordinate of every particle, normalised.
pub fn slab_histogram(configs: &[&[f64]], dim: usize, box_len: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let mut count = 0usize;
    for c in configs {
        for p in c.chunks(dim) {
            let k = ((p[0] / box_len * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
            h[k] += 1.0;
            count += 1;
        }
    }
    if count > 0 {
        for v in h.iter_mut() {
            *v /= count as f64;
        }
    }
    h
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

struct Walker {
    x: Vec<f64>,
    disp: Vec<f64>,
    rng: ChaCha8Rng,
    aborted: bool,
    jumps: Vec<JumpEvent>,
    error: Option<Error>,
}

fn min_image(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

/// Runs `spec.trajectories` trajectories under `schedule` and reports the
/// per-slice total-variation distance to `rho^psi`.
pub fn run_ensemble<S: StateSchedule>(
    space: &HilbertSpace,
    schedule: &S,
    interaction: Option<Interaction>,
    spec: &EnsembleSpec,
    exec: Exec,
) -> Result<(TrajectorySet, EquilibriumReport)> {
    spec.validate()?;
    let jump_mode = spec.mode == EnsembleMode::Jump && interaction.is_some();
    if jump_mode && space.fermion_number() != 1 {
        return Err(invalid("continuum jump mode is implemented for one fermion"));
    }
    if spec.mode == EnsembleMode::Jump && spec.integrator.correction_grid.is_some() {
        return Err(invalid("choose either jumps or the correction velocity, not both"));
    }
    let lat = space.basis.lattice();
    let l = lat.box_len();
    let d = lat.dim().get();
    let dims = space.fermion_number() * d;
    let flow = Flow::new(space, schedule, interaction.map(|i| i.operator), spec.integrator.clone(), exec)?;

    // Initial configurations.
    let f0 = flow.frame(spec.t0)?;
    let envelope = match spec.initial {
        InitialDistribution::Equilibrium => {
            let e = density_envelope(&f0.field, exec)?;
            check_efficiency(&f0.field, e)?;
            e
        }
        InitialDistribution::Uniform => 0.0,
    };
    let starts = exec.map_range(spec.trajectories, |id| -> Result<Walker> {
        let mut rng = trajectory_rng(spec.seed, id);
        let x = match spec.initial {
            InitialDistribution::Equilibrium => sample_configuration(&f0.field, envelope, &mut rng)?,
            InitialDistribution::Uniform => (0..dims).map(|_| rng.random::<f64>() * l).collect(),
        };
        Ok(Walker { x, disp: vec![0.0; dims], rng, aborted: false, jumps: Vec::new(), error: None })
    });
    let mut walkers = starts.into_iter().collect::<Result<Vec<_>>>()?;
    drop(f0);

    let slice_len = (spec.t1 - spec.t0) / spec.slices as f64;
    let steps_per_slice = ((slice_len.abs() / spec.integrator.step) - 1e-9).ceil().max(1.0) as usize;
    let dt = slice_len / steps_per_slice as f64;
    let mut times = vec![spec.t0];
    let mut configurations = vec![walkers.iter().map(|w| w.x.clone()).collect::<Vec<_>>()];

    for s in 0..spec.slices {
        for k in 0..steps_per_slice {
            let t = spec.t0 + s as f64 * slice_len + k as f64 * dt;
            // Prefetch the shared frames.
            for tt in [t, t + 0.5 * dt, t + dt] {
                flow.frame(tt)?;
            }
            exec.for_each_mut(&mut walkers, |_, w| {
                if w.aborted || w.error.is_some() {
                    return;
                }
                match flow.advance(&w.x, t, dt, 0) {
                    Ok(Step::Done(y)) => {
                        for a in 0..dims {
                            w.disp[a] += y[a] - w.x[a];
                            w.x[a] = lat.wrap(y[a]);
                        }
                    }
                    Ok(Step::Aborted) => w.aborted = true,
                    Err(e) => w.error = Some(e),
                }
            });
            if jump_mode {
                let inter = interaction.expect("jump mode");
                let frame = flow.frame(t + dt)?;
                let grid = spec.jump_grid.unwrap_or(4 * lat.max_integer() as usize + 1);
                let jumps = HybridJumps::new(space, &frame.field, inter.kernel, grid)?;
                let cell = l / grid as f64;
                exec.for_each_mut(&mut walkers, |id, w| {
                    if w.aborted || w.error.is_some() {
                        return;
                    }
                    if let Err(e) = hybrid_jump(space, &frame.field, &jumps, w, id, t + dt, dt, cell) {
                        w.error = Some(e);
                    }
                });
            }
            if let Some(e) = walkers.iter_mut().find_map(|w| w.error.take()) {
                return Err(e);
            }
            flow.retain_window(t + dt, t + 2.0 * dt);
        }
        times.push(spec.t0 + (s + 1) as f64 * slice_len);
        configurations.push(walkers.iter().map(|w| w.x.clone()).collect());
    }

    // Equilibrium statistics.
    let weights = slab_weights(space, spec.bins)?;
    let valid: Vec<usize> = (0..walkers.len()).filter(|&i| !walkers[i].aborted).collect();
    let mut tv = Vec::with_capacity(times.len());
    for (slice, &t) in times.iter().enumerate() {
        let exact = slab_probabilities(space, &weights, &schedule.state_at(t)?, exec)?;
        let sample: Vec<&[f64]> = valid.iter().map(|&i| configurations[slice][i].as_slice()).collect();
        tv.push(total_variation(&slab_histogram(&sample, d, l, spec.bins), &exact));
    }
    let excluded = walkers.len() - valid.len();
    let report = EquilibriumReport {
        bins: spec.bins,
        times: times.clone(),
        tv,
        excluded,
        noise_scale: (spec.bins as f64 / valid.len().max(1) as f64).sqrt(),
    };
    let mut jumps: Vec<JumpEvent> = Vec::new();
    let mut displacement = Vec::with_capacity(walkers.len());
    let mut aborted = Vec::with_capacity(walkers.len());
    for w in walkers {
        jumps.extend(w.jumps);
        displacement.push(w.disp);
        aborted.push(w.aborted);
    }
    let set = TrajectorySet {
        seed: spec.seed,
        integrator: spec.integrator.clone(),
        mode: spec.mode,
        times,
        configurations,
        displacement,
        aborted,
        jumps,
    };
    Ok((set, report))
}

/// Interaction jumps over one step of length `dt` ending at `t_end`, with
/// rates frozen at the end-of-step state. Targets are grid cells; the new
/// position is uniform within the chosen cell.
#[allow(clippy::too_many_arguments)]
fn hybrid_jump(
    space: &HilbertSpace,
    field: &PilotField,
    jumps: &HybridJumps,
    w: &mut Walker,
    id: usize,
    t_end: f64,
    dt: f64,
    cell: f64,
) -> Result<()> {
    let lat = space.basis.lattice();
    let l = lat.box_len();
    let mut elapsed = 0.0;
    let mut first = true;
    loop {
        let rates = jumps.rates_from(space, field, &w.x)?;
        let total: f64 = rates.iter().sum();
        if first && total * dt > MAX_RATE_STEP {
            return Err(Error::StepTooLarge(total * dt));
        }
        first = false;
        if total <= 0.0 {
            return Ok(());
        }
        let tau = -(1.0 - w.rng.random::<f64>()).ln() / total;
        if elapsed + tau >= dt {
            return Ok(());
        }
        elapsed += tau;
        let mut pick = w.rng.random::<f64>() * total;
        let mut g = rates.len() - 1;
        for (k, r) in rates.iter().enumerate() {
            if pick < *r {
                g = k;
                break;
            }
            pick -= r;
        }
        let from = w.x.clone();
        let to: Vec<f64> =
            jumps.target(g).iter().map(|c| lat.wrap(c + (w.rng.random::<f64>() - 0.5) * cell)).collect();
        for a in 0..to.len() {
            w.disp[a] += min_image(to[a] - from[a], l);
        }
        w.x = to.clone();
        w.jumps.push(JumpEvent { trajectory: id, time: t_end - dt + elapsed, from, to });
    }
}
