//! Free nonrelativistic particle on a ring lattice under the minimal jump
//! process, compared with Bohmian guidance in the continuum.
//!
//! As the lattice is refined the jump ensemble approaches the guidance
//! ensemble. The comparison statistic is the histogram of unwrapped
//! displacements after a fixed time.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::ensemble::{total_variation, trajectory_rng};
use crate::dynamics::evolution::{Evolution, EvolutionPlan, StateSchedule};
use crate::dynamics::jump::LatticeModel;
use crate::error::{invalid, Result};
use crate::fock::OperatorMatrix;
use crate::{Exec, C64};

/// `H = -(1 / 2 m a^2) (S + S^dagger - 2)` on `sites` points of a ring of
/// length `box_len`.
pub fn ring_model(sites: usize, box_len: f64, mass: f64) -> Result<LatticeModel> {
    if sites < 3 || !(box_len > 0.0) || !(mass > 0.0) {
        return Err(invalid("ring needs at least 3 sites, a positive length and a positive mass"));
    }
    let a = box_len / sites as f64;
    let t = 1.0 / (2.0 * mass * a * a);
    let mut trip = Vec::with_capacity(3 * sites);
    for j in 0..sites {
        trip.push((j, j, C64::from(2.0 * t)));
        trip.push((j, (j + 1) % sites, C64::from(-t)));
        trip.push((j, (j + sites - 1) % sites, C64::from(-t)));
    }
    let mut h = OperatorMatrix::from_triplets(sites, sites, &trip)?;
    h.mark_hermitian(1e-12)?;
    LatticeModel::new(sites, 1, h)
}

/// Minimum-image offset of `x` from `c` on a circle of length `l`.
fn offset(x: f64, c: f64, l: f64) -> f64 {
    let d = x - c;
    d - l * (d / l).round()
}

/// Gaussian packet `exp(-(x - c)^2 / (4 w^2) + i k0 x)` sampled on the
/// lattice sites and normalised.
pub fn lattice_packet(sites: usize, box_len: f64, center: f64, width: f64, k0: f64) -> Vec<C64> {
    let a = box_len / sites as f64;
    let mut v: Vec<C64> = (0..sites)
        .map(|j| {
            let x = j as f64 * a;
            let d = offset(x, center, box_len);
            C64::from_polar((-d * d / (4.0 * width * width)).exp(), k0 * (center + d))
        })
        .collect();
    let n = crate::fock::state::norm(&v);
    for z in v.iter_mut() {
        *z /= n;
    }
    v
}

/// Free Schroedinger field on a circle, expanded in `e^{i k_j x}` with
/// `|j| <= modes`.
pub struct ContinuumPacket {
    box_len: f64,
    mass: f64,
    modes: i64,
    coeffs: Vec<C64>,
}

impl ContinuumPacket {
    /// Same packet as [`lattice_packet`], with Fourier coefficients
    /// `exp(-w^2 (k - k0)^2 - i k c)`.
    pub fn gaussian(box_len: f64, mass: f64, modes: i64, center: f64, width: f64, k0: f64) -> Self {
        let mut coeffs: Vec<C64> = (-modes..=modes)
            .map(|j| {
                let k = 2.0 * PI * j as f64 / box_len;
                C64::from_polar((-width * width * (k - k0).powi(2)).exp(), -k * center)
            })
            .collect();
        let n = crate::fock::state::norm(&coeffs);
        for z in coeffs.iter_mut() {
            *z /= n;
        }
        ContinuumPacket { box_len, mass, modes, coeffs }
    }

    /// `psi(x, t)` and `d psi / dx`, up to the common factor `1/sqrt L`.
    pub fn value(&self, x: f64, t: f64) -> (C64, C64) {
        let unit = 2.0 * PI / self.box_len;
        let step = C64::from_polar(1.0, unit * x);
        let mut e = C64::from_polar(1.0, -unit * self.modes as f64 * x);
        let mut psi = C64::from(0.0);
        let mut dpsi = C64::from(0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = unit * (idx as i64 - self.modes) as f64;
            let term = c * e * C64::from_polar(1.0, -k * k * t / (2.0 * self.mass));
            psi += term;
            dpsi += term * C64::new(0.0, k);
            e *= step;
        }
        (psi, dpsi)
    }

    /// `|psi|^2` normalised on the circle.
    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.value(x, t).0.norm_sqr() / self.box_len
    }

    /// Guidance velocity `Im(psi' / psi) / m`.
    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        let (p, dp) = self.value(x, t);
        (dp / p).im / self.mass
    }

    /// RK4 trajectory; returns the unwrapped displacement after `duration`.
    pub fn displacement(&self, x0: f64, duration: f64, step: f64) -> f64 {
        let n = (duration / step).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        let mut x = x0;
        for k in 0..n {
            let t = k as f64 * h;
            let k1 = self.velocity(x, t);
            let k2 = self.velocity(x + 0.5 * h * k1, t + 0.5 * h);
            let k3 = self.velocity(x + 0.5 * h * k2, t + 0.5 * h);
            let k4 = self.velocity(x + h * k3, t + h);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x - x0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementSpec {
    pub levels: Vec<usize>,
    pub box_len: f64,
    pub mass: f64,
    pub width: f64,
    pub momentum: f64,
    pub duration: f64,
    pub trajectories: usize,
    pub seed: u64,
    /// Target `max rate * dt`.
    pub rate_step: f64,
    pub bin_width: f64,
    /// Bin edges sit at `bin_offset + k * bin_width`.
    pub bin_offset: f64,
    /// Fourier modes of the continuum reference.
    pub continuum_modes: i64,
    pub continuum_step: f64,
}

impl RefinementSpec {
    /// Rings of 32, 64 and 128 sites, `L = 20`, `m = 1`, unit width,
    /// `k0 = 2`, `T = 2`.
    pub fn reference(trajectories: usize, seed: u64) -> Self {
        RefinementSpec {
            levels: vec![32, 64, 128],
            box_len: 20.0,
            mass: 1.0,
            width: 1.0,
            momentum: 2.0,
            duration: 2.0,
            trajectories,
            seed,
            rate_step: 0.05,
            bin_width: 1.25,
            bin_offset: 0.05,
            continuum_modes: 64,
            continuum_step: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub sites: usize,
    pub spacing: f64,
    pub dt: f64,
    pub mean_displacement: f64,
    /// Observed jumps per trajectory.
    pub jumps_per_trajectory: f64,
    /// `int sum_{x,y} max(0, J(x, y)) dt`, the expected count.
    pub expected_jumps: f64,
    pub tv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub reference_mean: f64,
    pub levels: Vec<RefinementLevel>,
    pub monotone: bool,
}

fn histogram(values: &[f64], width: f64, offset: f64, lo: i64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &v in values {
        let k = ((v - offset) / width).floor() as i64 - lo;
        let k = k.clamp(0, bins as i64 - 1) as usize;
        h[k] += 1.0;
    }
    for x in h.iter_mut() {
        *x /= values.len() as f64;
    }
    h
}

/// Jump ensemble on one ring; returns displacements, observed and
/// expected jump counts and the step used.
pub fn ring_jump_ensemble(spec: &RefinementSpec, sites: usize, exec: Exec) -> Result<(Vec<f64>, f64, f64, f64)> {
    let model = ring_model(sites, spec.box_len, spec.mass)?;
    let a = spec.box_len / sites as f64;
    let psi0 = lattice_packet(sites, spec.box_len, spec.box_len / 2.0, spec.width, spec.momentum);
    let plan = EvolutionPlan::new(model.hamiltonian().clone(), exec)?;
    let evo = Evolution::new(&plan, crate::fock::QuantumState::normalized(psi0.clone(), 0.0)?)?;
    // Step from the largest rate over occupied sites at a few times.
    let floor = 1e-10 / sites as f64;
    let mut rmax = 0.0f64;
    for k in 0..=20 {
        let s = evo.state_at(spec.duration * k as f64 / 20.0)?;
        rmax = rmax.max(model.max_total_rate(s.amplitudes(), floor));
    }
    let steps = ((rmax * spec.duration / spec.rate_step).ceil() as usize).max(1);
    let dt = spec.duration / steps as f64;

    let cdf: Vec<f64> = psi0
        .iter()
        .scan(0.0, |acc, z| {
            *acc += z.norm_sqr();
            Some(*acc)
        })
        .collect();
    struct Walker {
        site: usize,
        hops: i64,
        jumps: usize,
        rng: rand_chacha::ChaCha8Rng,
        error: Option<crate::Error>,
    }
    let mut walkers: Vec<Walker> = (0..spec.trajectories)
        .map(|id| {
            let mut rng = trajectory_rng(spec.seed, id);
            let u: f64 = rng.random::<f64>() * cdf[sites - 1];
            let site = cdf.partition_point(|c| *c <= u).min(sites - 1);
            Walker { site, hops: 0, jumps: 0, rng, error: None }
        })
        .collect();
    let mut expected = 0.0;
    for k in 0..steps {
        // Rates frozen at the midpoint of the step.
        let s = evo.state_at((k as f64 + 0.5) * dt)?;
        let psi = s.amplitudes();
        expected += model.net_positive_flux(psi) * dt;
        exec.for_each_mut(&mut walkers, |_, w| {
            if w.error.is_some() {
                return;
            }
            let mut y = w.site;
            match model.jump_path(psi, y, dt, &mut w.rng) {
                Ok(path) => {
                    for x in path {
                        w.hops += if x == (y + 1) % sites { 1 } else { -1 };
                        w.jumps += 1;
                        y = x;
                    }
                    w.site = y;
                }
                Err(e) => w.error = Some(e),
            }
        });
        if let Some(e) = walkers.iter_mut().find_map(|w| w.error.take()) {
            return Err(e);
        }
    }
    let disp: Vec<f64> = walkers.iter().map(|w| w.hops as f64 * a).collect();
    let jumps = walkers.iter().map(|w| w.jumps).sum::<usize>() as f64 / spec.trajectories as f64;
    Ok((disp, jumps, expected, dt))
}

/// Guidance ensemble of the continuum packet, sampled from `|psi_0|^2` by
/// rejection on the circle.
pub fn continuum_ensemble(spec: &RefinementSpec, exec: Exec) -> Vec<f64> {
    let packet = ContinuumPacket::gaussian(
        spec.box_len,
        spec.mass,
        spec.continuum_modes,
        spec.box_len / 2.0,
        spec.width,
        spec.momentum,
    );
    let peak = (0..2000)
        .map(|k| packet.density(k as f64 * spec.box_len / 2000.0, 0.0))
        .fold(0.0, f64::max)
        * 1.2;
    // Streams after the lattice ensembles' ids keep the samples independent.
    let offset = spec.trajectories;
    exec.map_range(spec.trajectories, |id| {
        let mut rng = trajectory_rng(spec.seed, offset + id);
        let x0 = loop {
            let x = rng.random::<f64>() * spec.box_len;
            if rng.random::<f64>() * peak < packet.density(x, 0.0) {
                break x;
            }
        };
        packet.displacement(x0, spec.duration, spec.continuum_step)
    })
}

/// Runs every refinement level against one continuum guidance ensemble.
pub fn refinement_study(spec: &RefinementSpec, exec: Exec) -> Result<RefinementReport> {
    if spec.levels.is_empty() || spec.trajectories == 0 || !(spec.bin_width > 0.0) {
        return Err(invalid("refinement study needs levels, trajectories and a positive bin width"));
    }
    let reference = continuum_ensemble(spec, exec);
    let mut ensembles = Vec::with_capacity(spec.levels.len());
    for &sites in &spec.levels {
        ensembles.push((sites, ring_jump_ensemble(spec, sites, exec)?));
    }
    let all = reference.iter().chain(ensembles.iter().flat_map(|e| e.1 .0.iter()));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in all {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let klo = ((lo - spec.bin_offset) / spec.bin_width).floor() as i64;
    let khi = ((hi - spec.bin_offset) / spec.bin_width).floor() as i64;
    let bins = (khi - klo + 1) as usize;
    let href = histogram(&reference, spec.bin_width, spec.bin_offset, klo, bins);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let levels: Vec<RefinementLevel> = ensembles
        .into_iter()
        .map(|(sites, (disp, jumps, expected, dt))| RefinementLevel {
            sites,
            spacing: spec.box_len / sites as f64,
            dt,
            mean_displacement: mean(&disp),
            jumps_per_trajectory: jumps,
            expected_jumps: expected,
            tv: total_variation(&histogram(&disp, spec.bin_width, spec.bin_offset, klo, bins), &href),
        })
        .collect();
    let monotone = levels.windows(2).all(|w| w[1].tv < w[0].tv);
    Ok(RefinementReport { reference_mean: mean(&reference), levels, monotone })
}
