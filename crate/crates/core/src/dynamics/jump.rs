//! Minimal jump process: rates `sigma(x <- y) = max(0, J(x, y)) / rho(y)`
//! with `J(x, y) = 2 Im <psi| P(x) H P(y) |psi>`.
//!
//! Two realisations are provided: a discrete one on a finite site set with
//! an orthogonal position measure, and a hybrid one for a single cut-off
//! Dirac fermion in which the free part drives a deterministic drift and the
//! interaction part drives jumps onto a target grid.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::fock::{HilbertSpace, InteractionKernel, OperatorMatrix};
use crate::{CMat, C64};

/// Largest allowed `total_rate * dt`.
pub const MAX_RATE_STEP: f64 = 0.1;

/// Hamiltonian on `sites (x) internal`, state index `site * internal + a`.
pub struct LatticeModel {
    sites: usize,
    internal: usize,
    h: OperatorMatrix,
}

impl LatticeModel {
    pub fn new(sites: usize, internal: usize, h: OperatorMatrix) -> Result<Self> {
        if sites == 0 || internal == 0 || h.nrows() != sites * internal || h.ncols() != sites * internal {
            return Err(Error::DimensionMismatch { expected: sites * internal, found: h.nrows() });
        }
        if !h.is_hermitian() {
            return Err(invalid("lattice Hamiltonian must be checked Hermitian"));
        }
        Ok(LatticeModel { sites, internal, h })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn internal(&self) -> usize {
        self.internal
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.h
    }

    pub fn density(&self, psi: &[C64], site: usize) -> f64 {
        psi[site * self.internal..(site + 1) * self.internal].iter().map(|z| z.norm_sqr()).sum()
    }

    /// `J(x, y)` for every `x != y` with a non-zero coupling, as `(x, J)`.
    pub fn flux_from(&self, psi: &[C64], y: usize) -> Vec<(usize, f64)> {
        let k = self.internal;
        let mut acc: Vec<(usize, C64)> = Vec::new();
        // H_{(x,a),(y,b)} = conj(H_{(y,b),(x,a)}).
        for b in 0..k {
            let col = y * k + b;
            for (row, v) in self.h.row(col) {
                let x = row / k;
                if x == y {
                    continue;
                }
                let term = psi[row].conj() * v.conj() * psi[col];
                match acc.iter_mut().find(|e| e.0 == x) {
                    Some(e) => e.1 += term,
                    None => acc.push((x, term)),
                }
            }
        }
        acc.sort_by_key(|e| e.0);
        acc.into_iter().map(|(x, z)| (x, 2.0 * z.im)).collect()
    }

    /// Jump rates out of `y`.
    pub fn rates_from(&self, psi: &[C64], y: usize) -> Vec<(usize, f64)> {
        let rho = self.density(psi, y);
        if !(rho > 0.0) {
            return Vec::new();
        }
        self.flux_from(psi, y).into_iter().filter(|e| e.1 > 0.0).map(|(x, j)| (x, j / rho)).collect()
    }

    /// Net probability flow into every site, `sum_y J(x, y)`. This equals
    /// `d rho_x / dt` for the Schroedinger evolution.
    pub fn net_flux(&self, psi: &[C64]) -> Vec<f64> {
        let mut out = vec![0.0; self.sites];
        for y in 0..self.sites {
            for (x, j) in self.flux_from(psi, y) {
                out[x] += j;
            }
        }
        out
    }

    /// Largest total jump rate over sites with `rho > floor`.
    pub fn max_total_rate(&self, psi: &[C64], floor: f64) -> f64 {
        (0..self.sites)
            .filter(|&y| self.density(psi, y) > floor)
            .map(|y| self.rates_from(psi, y).iter().map(|e| e.1).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Expected jumps per unit time, `sum_{x,y} max(0, J(x, y))`.
    pub fn net_positive_flux(&self, psi: &[C64]) -> f64 {
        (0..self.sites).map(|y| self.flux_from(psi, y).iter().map(|e| e.1.max(0.0)).sum::<f64>()).sum()
    }

    /// One step of the pure jump process with rates frozen at `psi`: jumps
    /// are drawn with exponential waiting times until `dt` is used up.
    /// Returns the visited sites in order (empty if no jump occurred).
    pub fn jump_path<R: Rng>(&self, psi: &[C64], site: usize, dt: f64, rng: &mut R) -> Result<Vec<usize>> {
        let mut y = site;
        let mut elapsed = 0.0;
        let mut path = Vec::new();
        loop {
            let rates = self.rates_from(psi, y);
            let total: f64 = rates.iter().map(|e| e.1).sum();
            if path.is_empty() && total * dt > MAX_RATE_STEP {
                return Err(Error::StepTooLarge(total * dt));
            }
            if total <= 0.0 {
                return Ok(path);
            }
            let u: f64 = 1.0 - rng.random::<f64>();
            let tau = -u.ln() / total;
            if elapsed + tau >= dt {
                return Ok(path);
            }
            elapsed += tau;
            let mut pick = rng.random::<f64>() * total;
            let mut target = rates[rates.len() - 1].0;
            for &(x, r) in &rates {
                if pick < r {
                    target = x;
                    break;
                }
                pick -= r;
            }
            y = target;
            path.push(y);
        }
    }

    /// [`jump_path`](Self::jump_path) reduced to the final site and the
    /// number of jumps.
    pub fn jump_step<R: Rng>(&self, psi: &[C64], site: usize, dt: f64, rng: &mut R) -> Result<(usize, usize)> {
        let path = self.jump_path(psi, site, dt, rng)?;
        Ok((path.last().copied().unwrap_or(site), path.len()))
    }
}

/// Interaction-driven jump rates for one fermion onto a uniform target grid.
pub struct HybridJumps {
    /// Projection coefficients `A_i(x_g)` for every grid point,
    /// `[g][i * N_b + xi]`.
    targets: Vec<Vec<C64>>,
    target_points: Vec<Vec<f64>>,
    weights: CMat,
    coupling: CMat,
    cell: f64,
    nb: usize,
}

/// `A_i(x)_xi = sum_a conj(phi_{i,a}(x)) psi_{a,xi}(x)`.
fn projection(space: &HilbertSpace, amplitude: &[C64], x: &[f64]) -> Vec<C64> {
    let basis = &space.basis;
    let nc = basis.components();
    let nb = space.boson.dim();
    let vals = basis.mode_values(x);
    let mut out = vec![C64::from(0.0); basis.len() * nb];
    for i in 0..basis.len() {
        for c in 0..nc {
            let phi = vals[i * nc + c].conj();
            if phi == C64::from(0.0) {
                continue;
            }
            for xi in 0..nb {
                out[i * nb + xi] += phi * amplitude[c * nb + xi];
            }
        }
    }
    out
}

impl HybridJumps {
    /// Prepares targets for `field` (the current state) on `points^d` grid
    /// points.
    pub fn new(
        space: &HilbertSpace,
        field: &crate::position::PilotField,
        kernel: &InteractionKernel,
        points: usize,
    ) -> Result<Self> {
        if space.fermion_number() != 1 {
            return Err(invalid("hybrid jumps are implemented for one fermion"));
        }
        let lat = space.basis.lattice();
        let d = lat.dim().get();
        if points < 2 * lat.max_integer() as usize + 1 {
            return Err(invalid("jump target grid must resolve every lattice momentum"));
        }
        let l = lat.box_len();
        let total = points.pow(d as u32);
        let mut targets = Vec::with_capacity(total);
        let mut target_points = Vec::with_capacity(total);
        for idx in 0..total {
            let mut r = idx;
            let mut x = vec![0.0; d];
            for a in (0..d).rev() {
                x[a] = (r % points) as f64 * l / points as f64;
                r /= points;
            }
            let amp = field.amplitude(&x)?;
            targets.push(projection(space, &amp.values, &x));
            target_points.push(x);
        }
        Ok(HybridJumps {
            targets,
            target_points,
            weights: kernel.weights(&space.basis)?,
            coupling: space.boson.coupling(),
            cell: lat.volume() / total as f64,
            nb: space.boson.dim(),
        })
    }

    pub fn target(&self, g: usize) -> &[f64] {
        &self.target_points[g]
    }

    /// Rates from the current position `y` to every target cell.
    pub fn rates_from(&self, space: &HilbertSpace, field: &crate::position::PilotField, y: &[f64]) -> Result<Vec<f64>> {
        let amp = field.amplitude(y)?;
        let rho = amp.density();
        if !(rho > field.node_floor()) {
            return Err(Error::NearNode { density: rho, floor: field.node_floor(), positions: y.to_vec() });
        }
        let a = projection(space, &amp.values, y);
        let n = self.weights.nrows();
        let nb = self.nb;
        // B = (W (x) X) A(y).
        let mut b = vec![C64::from(0.0); n * nb];
        for i in 0..n {
            for j in 0..n {
                let w = self.weights[(i, j)];
                if w == C64::from(0.0) {
                    continue;
                }
                for xi in 0..nb {
                    for xj in 0..nb {
                        b[i * nb + xi] += w * self.coupling[(xi, xj)] * a[j * nb + xj];
                    }
                }
            }
        }
        Ok(self
            .targets
            .iter()
            .map(|t| {
                let j: C64 = t.iter().zip(&b).map(|(p, q)| p.conj() * q).sum();
                (2.0 * j.im).max(0.0) * self.cell / rho
            })
            .collect())
    }
}
