//! Position representation: amplitudes, the beable density, the guidance
//! velocity, the cut-off source term `g` and the correction velocity.
//!
//! Configurations are flat slices of `n * d` coordinates, particle-major.
//! Amplitude components are indexed by `(c_1, ..., c_n, xi)` with
//! `c = species * spinor_dim + a`, row-major.

mod correction;

pub use correction::{correction_velocity, solve_torus_poisson, CorrectionField, PoissonSolution};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{HilbertSpace, ModeBasis, OperatorMatrix, QuantumState};
use crate::{CMat, Exec, C64};

/// Relative node floor: velocities are refused where
/// `rho <= NODE_FLOOR / V^n`.
pub const NODE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<f64>,
    pub time: f64,
}

impl Configuration {
    pub fn new(positions: Vec<f64>, time: f64) -> Self {
        Configuration { positions, time }
    }
}

/// Values `psi_{c_1..c_n, xi}(x)` at one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeTensor {
    pub n: usize,
    pub components: usize,
    pub boson_dim: usize,
    pub values: Vec<C64>,
}

impl AmplitudeTensor {
    pub fn density(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Flat index of `(c_1..c_n, xi)`.
    pub fn index(&self, comps: &[usize], xi: usize) -> usize {
        comps.iter().fold(0, |acc, &c| acc * self.components + c) * self.boson_dim + xi
    }

    /// `sum conj(self) * other` over all indices.
    pub fn contract(&self, other: &AmplitudeTensor) -> C64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocitySample {
    /// `n * d` components.
    pub v: Vec<f64>,
    pub density: f64,
    /// Cut-off source term, if an interaction is attached.
    pub g: Option<f64>,
}

/// Determinant of a small complex matrix stored row-major, by Gaussian
/// elimination with partial pivoting.
fn det(mut a: Vec<C64>, n: usize) -> C64 {
    let mut d = C64::from(1.0);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].norm() > a[piv * n + col].norm() {
                piv = r;
            }
        }
        if a[piv * n + col] == C64::from(0.0) {
            return C64::from(0.0);
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            d = -d;
        }
        let p = a[col * n + col];
        d *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != C64::from(0.0) {
                for c in col..n {
                    let v = a[col * n + c];
                    a[r * n + c] -= f * v;
                }
            }
        }
    }
    d
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

enum FieldKind {
    /// n = 1: coefficients `[momentum][component * N_b + xi]` of
    /// `e^{i p.x} / sqrt V`.
    Single { coeffs: Vec<C64> },
    /// General n: non-zero rows `(mask, amplitudes over xi)`.
    Slater { active: Vec<(u128, Vec<C64>)> },
}

/// Position-space view of a sector state.
pub struct WaveField<'a> {
    space: &'a HilbertSpace,
    kind: FieldKind,
}

impl<'a> WaveField<'a> {
    pub fn new(space: &'a HilbertSpace, amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
        }
        let basis = &space.basis;
        let nb = space.boson.dim();
        let nc = basis.components();
        let sd = basis.spinor_dim();
        let kind = if space.fermion_number() == 1 {
            let m = basis.lattice().len();
            let mut coeffs = vec![C64::from(0.0); m * nc * nb];
            for (k, &mask) in space.sector.masks().iter().enumerate() {
                let i = mask.trailing_zeros() as usize;
                let l = basis.label(i);
                for (a, w) in basis.spinor(i).iter().enumerate() {
                    let c = l.species * sd + a;
                    for xi in 0..nb {
                        coeffs[(l.momentum * nc + c) * nb + xi] += w * amplitudes[k * nb + xi];
                    }
                }
            }
            FieldKind::Single { coeffs }
        } else {
            let active = space
                .sector
                .masks()
                .iter()
                .enumerate()
                .filter_map(|(k, &mask)| {
                    let amp = &amplitudes[k * nb..(k + 1) * nb];
                    amp.iter().any(|z| *z != C64::from(0.0)).then(|| (mask, amp.to_vec()))
                })
                .collect();
            FieldKind::Slater { active }
        };
        Ok(WaveField { space, kind })
    }

    pub fn space(&self) -> &HilbertSpace {
        self.space
    }

    fn basis(&self) -> &ModeBasis {
        &self.space.basis
    }

    fn check_config(&self, x: &[f64]) -> Result<()> {
        let need = self.space.fermion_number() * self.basis().lattice().dim().get();
        if x.len() != need {
            return Err(Error::DimensionMismatch { expected: need, found: x.len() });
        }
        Ok(())
    }

    /// `psi_{c_1..c_n, xi}(x)`.
    pub fn amplitude(&self, x: &[f64]) -> Result<AmplitudeTensor> {
        self.check_config(x)?;
        let basis = self.basis();
        let n = self.space.fermion_number();
        let nc = basis.components();
        let nb = self.space.boson.dim();
        let d = basis.lattice().dim().get();
        let len = nc.pow(n as u32) * nb;
        let values = match &self.kind {
            FieldKind::Single { coeffs } => {
                let phases = basis.lattice().phases(x);
                let norm = 1.0 / basis.lattice().volume().sqrt();
                let mut out = vec![C64::from(0.0); len];
                for (p, ph) in phases.iter().enumerate() {
                    let f = ph * norm;
                    for (o, c) in out.iter_mut().zip(&coeffs[p * nc * nb..(p + 1) * nc * nb]) {
                        *o += f * c;
                    }
                }
                out
            }
            FieldKind::Slater { active } => {
                let vals: Vec<Vec<C64>> = (0..n).map(|k| basis.mode_values(&x[k * d..(k + 1) * d])).collect();
                let scale = 1.0 / factorial(n).sqrt();
                let mut out = vec![C64::from(0.0); len];
                let mut comps = vec![0usize; n];
                let mut modes = Vec::with_capacity(n);
                for t in 0..nc.pow(n as u32) {
                    let mut r = t;
                    for k in (0..n).rev() {
                        comps[k] = r % nc;
                        r /= nc;
                    }
                    for (mask, amp) in active {
                        modes.clear();
                        let mut bits = *mask;
                        while bits != 0 {
                            modes.push(bits.trailing_zeros() as usize);
                            bits &= bits - 1;
                        }
                        let mut mat = Vec::with_capacity(n * n);
                        for k in 0..n {
                            for &i in &modes {
                                mat.push(vals[k][i * nc + comps[k]]);
                            }
                        }
                        let dv = det(mat, n) * scale;
                        if dv == C64::from(0.0) {
                            continue;
                        }
                        for xi in 0..nb {
                            out[t * nb + xi] += dv * amp[xi];
                        }
                    }
                }
                out
            }
        };
        Ok(AmplitudeTensor { n, components: nc, boson_dim: nb, values })
    }

    /// Spatial gradient of the amplitude for n = 1: entry `[axis]`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<AmplitudeTensor>> {
        self.check_config(x)?;
        let FieldKind::Single { coeffs } = &self.kind else {
            return Err(invalid("amplitude gradients are only provided for a single fermion"));
        };
        let basis = self.basis();
        let nc = basis.components();
        let nb = self.space.boson.dim();
        let d = basis.lattice().dim().get();
        let phases = basis.lattice().phases(x);
        let norm = 1.0 / basis.lattice().volume().sqrt();
        let mut out = vec![vec![C64::from(0.0); nc * nb]; d];
        for (p, ph) in phases.iter().enumerate() {
            let mom = basis.lattice().momentum(p);
            for axis in 0..d {
                let f = ph * C64::new(0.0, mom[axis]) * norm;
                for (o, c) in out[axis].iter_mut().zip(&coeffs[p * nc * nb..(p + 1) * nc * nb]) {
                    *o += f * c;
                }
            }
        }
        Ok(out.into_iter().map(|values| AmplitudeTensor { n: 1, components: nc, boson_dim: nb, values }).collect())
    }
}

/// Alpha matrices lifted block-diagonally to species (x) spinor.
fn component_alphas(basis: &ModeBasis) -> Vec<CMat> {
    let ns = basis.species().len();
    let sd = basis.spinor_dim();
    basis
        .spinors()
        .algebra()
        .alphas()
        .iter()
        .map(|a| {
            let mut m = CMat::zeros(ns * sd, ns * sd);
            for s in 0..ns {
                m.view_mut((s * sd, s * sd), (sd, sd)).copy_from(a);
            }
            m
        })
        .collect()
}

/// `sum conj(psi) (alpha^{(k)} psi)` for every particle `k` and axis.
pub fn current(psi: &AmplitudeTensor, alphas: &[CMat]) -> Vec<f64> {
    let n = psi.n;
    let nc = psi.components;
    let nb = psi.boson_dim;
    let d = alphas.len();
    let mut j = vec![0.0; n * d];
    let total = psi.values.len() / nb;
    for k in 0..n {
        // Stride of index c_k in the flat tensor (before the boson factor).
        let stride = nc.pow((n - 1 - k) as u32);
        for t in 0..total {
            let ck = (t / stride) % nc;
            let base = t - ck * stride;
            for axis in 0..d {
                let a = &alphas[axis];
                let mut acc = C64::from(0.0);
                for c2 in 0..nc {
                    let coef = a[(ck, c2)];
                    if coef == C64::from(0.0) {
                        continue;
                    }
                    let t2 = base + c2 * stride;
                    for xi in 0..nb {
                        acc += psi.values[t * nb + xi].conj() * coef * psi.values[t2 * nb + xi];
                    }
                }
                j[k * d + axis] += acc.re;
            }
        }
    }
    j
}

/// Density, velocity and (optionally) the `g` term for one state.
pub struct PilotField<'a> {
    psi: WaveField<'a>,
    interaction_psi: Option<WaveField<'a>>,
    alphas: Vec<CMat>,
    floor: f64,
}

impl<'a> PilotField<'a> {
    /// `h_int`, when given, is the interaction Hamiltonian used for `g`.
    pub fn new(
        space: &'a HilbertSpace,
        state: &QuantumState,
        h_int: Option<&OperatorMatrix>,
        exec: Exec,
    ) -> Result<Self> {
        let psi = WaveField::new(space, state.amplitudes())?;
        let interaction_psi = match h_int {
            Some(h) => Some(WaveField::new(space, &h.apply(state.amplitudes(), exec)?)?),
            None => None,
        };
        let n = space.fermion_number() as i32;
        let floor = NODE_FLOOR / space.basis.lattice().volume().powi(n);
        Ok(PilotField { psi, interaction_psi, alphas: component_alphas(&space.basis), floor })
    }

    pub fn wave(&self) -> &WaveField<'a> {
        &self.psi
    }

    pub fn space(&self) -> &HilbertSpace {
        self.psi.space
    }

    pub fn node_floor(&self) -> f64 {
        self.floor
    }

    pub fn amplitude(&self, x: &[f64]) -> Result<AmplitudeTensor> {
        self.psi.amplitude(x)
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.psi.amplitude(x)?.density())
    }

    /// `g(x) = -2 Im sum conj(psi) (H_I psi)(x)`; zero without interaction.
    pub fn g_term(&self, x: &[f64]) -> Result<f64> {
        match &self.interaction_psi {
            None => Ok(0.0),
            Some(h) => {
                let a = self.psi.amplitude(x)?;
                let b = h.amplitude(x)?;
                Ok(-2.0 * a.contract(&b).im)
            }
        }
    }

    /// Probability current `rho v` (no node check).
    pub fn current(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(current(&self.psi.amplitude(x)?, &self.alphas))
    }

    /// Guidance velocity. Fails with [`Error::NearNode`] at nodes.
    pub fn velocity(&self, x: &[f64]) -> Result<VelocitySample> {
        let a = self.psi.amplitude(x)?;
        let rho = a.density();
        if !(rho > self.floor) {
            return Err(Error::NearNode { density: rho, floor: self.floor, positions: x.to_vec() });
        }
        let mut v = current(&a, &self.alphas);
        for c in v.iter_mut() {
            *c /= rho;
        }
        let g = match &self.interaction_psi {
            None => None,
            Some(h) => Some(-2.0 * a.contract(&h.amplitude(x)?).im),
        };
        Ok(VelocitySample { v, density: rho, g })
    }
}

/// `d rho / dt (x) = 2 Im sum conj(psi) (H psi)(x)` for the full Hamiltonian.
pub fn density_rate(psi: &WaveField, h_psi: &WaveField, x: &[f64]) -> Result<f64> {
    Ok(2.0 * psi.amplitude(x)?.contract(&h_psi.amplitude(x)?).im)
}

/// Time reversal `psi -> sigma_3 psi^*` for a single fermion in d = 1,
/// expressed in the mode basis. Maps mode `(band, p)` onto `(band, -p)`.
pub fn time_reverse_single(space: &HilbertSpace, amplitudes: &[C64]) -> Result<Vec<C64>> {
    let basis = &space.basis;
    if basis.lattice().dim() != crate::modes::SpaceDim::One || space.fermion_number() != 1 {
        return Err(invalid("time reversal is provided for one fermion in one dimension"));
    }
    if amplitudes.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
    }
    let nb = space.boson.dim();
    let mut out = vec![C64::from(0.0); amplitudes.len()];
    for (k, &mask) in space.sector.masks().iter().enumerate() {
        let i = mask.trailing_zeros() as usize;
        let wi = basis.spinor(i);
        let theta_w = [wi[0].conj(), -wi[1].conj()];
        let target_p = basis.lattice().negate(basis.label(i).momentum);
        for (k2, &mask2) in space.sector.masks().iter().enumerate() {
            let j = mask2.trailing_zeros() as usize;
            let lj = basis.label(j);
            if lj.momentum != target_p || lj.species != basis.label(i).species {
                continue;
            }
            let wj = basis.spinor(j);
            let ov = wj[0].conj() * theta_w[0] + wj[1].conj() * theta_w[1];
            if ov.norm() < 1e-15 {
                continue;
            }
            for xi in 0..nb {
                out[k2 * nb + xi] += ov * amplitudes[k * nb + xi].conj();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_ladder_combination, BosonSpace, FockSector};
    use crate::modes::{build_mode_lattice, SpaceDim, SpeciesTable};
    use std::f64::consts::PI;

    fn space_1d(cutoff: f64, mass: f64, n: usize) -> HilbertSpace {
        let lat = build_mode_lattice(SpaceDim::One, 2.0 * PI, cutoff).unwrap();
        let b = ModeBasis::build(lat, SpeciesTable::single(mass)).unwrap();
        HilbertSpace::new(b, n, BosonSpace::none()).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> QuantumState {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        QuantumState::normalized((0..dim).map(|_| C64::new(next(), next())).collect(), 0.0).unwrap()
    }

    #[test]
    fn determinant_small() {
        let m = vec![C64::from(2.0), C64::from(1.0), C64::from(1.0), C64::from(3.0)];
        assert!((det(m, 2) - C64::from(5.0)).norm() < 1e-15);
        let m = vec![C64::from(0.0), C64::from(1.0), C64::from(1.0), C64::from(0.0)];
        assert!((det(m, 2) + C64::from(1.0)).norm() < 1e-15);
    }

    #[test]
    fn single_mode_plane_wave() {
        let sp = space_1d(2.5, 0.0, 1);
        let i = sp.basis.index_of(crate::fock::SingleParticleIndex {
            species: 0,
            band: crate::fock::Band::Positive,
            spin: 0,
            momentum: 3,
        });
        let k = sp.sector.index_of(1u128 << i.unwrap()).unwrap();
        let st = QuantumState::basis_state(sp.dim(), k).unwrap();
        let f = PilotField::new(&sp, &st, None, Exec::Sequential).unwrap();
        for &x in &[0.1, 2.0, 5.5] {
            let a = f.amplitude(&[x]).unwrap();
            let ph = C64::from_polar(1.0 / (2.0 * PI).sqrt(), x);
            let w = sp.basis.spinor(i.unwrap());
            assert!((a.values[0] - w[0] * ph).norm() < 1e-14);
            assert!((a.values[1] - w[1] * ph).norm() < 1e-14);
            let v = f.velocity(&[x]).unwrap();
            assert!((v.v[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn slater_amplitude_matches_field_operator_oracle() {
        // <0| psi(x_2) psi(x_1) |Psi> / sqrt 2 with psi_c(x) = sum_i phi_{i,c}(x) a_i.
        let sp = space_1d(1.5, 0.7, 2);
        let st = random_state(sp.dim(), 7);
        let field = WaveField::new(&sp, st.amplitudes()).unwrap();
        let total = sp.basis.len();
        let s1 = FockSector::new(total, 1, 1).unwrap();
        let s0 = FockSector::new(total, 0, 1).unwrap();
        let nc = sp.basis.components();
        for (trial, x) in [[0.3, 1.9], [4.0, 0.2], [2.2, 2.3], [6.0, 3.1], [1.0, 5.0]].iter().enumerate() {
            let a = field.amplitude(x).unwrap();
            let v1 = sp.basis.mode_values(&[x[0]]);
            let v2 = sp.basis.mode_values(&[x[1]]);
            for c1 in 0..nc {
                for c2 in 0..nc {
                    let k1: Vec<C64> = (0..total).map(|i| v1[i * nc + c1]).collect();
                    let k2: Vec<C64> = (0..total).map(|i| v2[i * nc + c2]).collect();
                    let step = apply_ladder_combination(&k1, false, &sp.sector, &s1, 1, st.amplitudes()).unwrap();
                    let fin = apply_ladder_combination(&k2, false, &s1, &s0, 1, &step).unwrap();
                    let expect = fin[0] / 2f64.sqrt();
                    assert!((a.values[a.index(&[c1, c2], 0)] - expect).norm() < 1e-12, "trial {trial}");
                }
            }
        }
    }

    #[test]
    fn antisymmetry_under_labelled_exchange() {
        let sp = space_1d(1.5, 1.0, 2);
        let st = random_state(sp.dim(), 3);
        let f = WaveField::new(&sp, st.amplitudes()).unwrap();
        let a = f.amplitude(&[0.4, 2.5]).unwrap();
        let b = f.amplitude(&[2.5, 0.4]).unwrap();
        for c1 in 0..2 {
            for c2 in 0..2 {
                let x = a.values[a.index(&[c1, c2], 0)];
                let y = b.values[b.index(&[c2, c1], 0)];
                assert!((x + y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sea_state_is_translation_invariant_and_currentless() {
        let sp = space_1d(1.5, 1.0, 3);
        let st = crate::fock::dirac_sea_state(&sp).unwrap();
        let f = PilotField::new(&sp, &st, None, Exec::Sequential).unwrap();
        let base = [0.3, 1.4, 4.0];
        let r0 = f.density(&base).unwrap();
        assert!(r0 > 0.0);
        for &s in &[0.5, 1.7, 3.3] {
            let shifted: Vec<f64> = base.iter().map(|x| x + s).collect();
            assert!((f.density(&shifted).unwrap() - r0).abs() < 1e-12 * (1.0 + r0));
            let v = f.velocity(&shifted).unwrap();
            assert!(v.v.iter().all(|c| c.abs() < 1e-10));
        }
    }

    #[test]
    fn node_is_flagged() {
        // Massless right-movers share the spinor (1,1)/sqrt 2, so
        // e^{ix} + e^{2ix} vanishes at x = pi.
        let sp = space_1d(2.5, 0.0, 1);
        let mut amps = vec![C64::from(0.0); sp.dim()];
        for mom in [3, 4] {
            let i = sp
                .basis
                .index_of(crate::fock::SingleParticleIndex {
                    species: 0,
                    band: crate::fock::Band::Positive,
                    spin: 0,
                    momentum: mom,
                })
                .unwrap();
            amps[sp.sector.index_of(1u128 << i).unwrap()] = C64::from(1.0);
        }
        let st = QuantumState::normalized(amps, 0.0).unwrap();
        let f = PilotField::new(&sp, &st, None, Exec::Sequential).unwrap();
        assert!(f.density(&[PI]).unwrap() < 1e-28);
        assert!(matches!(f.velocity(&[PI]), Err(Error::NearNode { .. })));
        assert!(f.velocity(&[1.0]).is_ok());
    }

    #[test]
    fn density_normalised_for_two_particles() {
        let sp = space_1d(1.5, 0.4, 2);
        let st = random_state(sp.dim(), 11);
        let f = WaveField::new(&sp, st.amplitudes()).unwrap();
        let n = 16;
        let h = 2.0 * PI / n as f64;
        let mut total = 0.0;
        for a in 0..n {
            for b in 0..n {
                total += f.amplitude(&[a as f64 * h, b as f64 * h]).unwrap().density() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_mode_velocity_closed_form() {
        // Massive equal superposition of +p and -p in the positive band.
        let m = 1.0;
        let sp = space_1d(1.5, m, 1);
        let pick = |mom: usize| {
            let i = sp
                .basis
                .index_of(crate::fock::SingleParticleIndex {
                    species: 0,
                    band: crate::fock::Band::Positive,
                    spin: 0,
                    momentum: mom,
                })
                .unwrap();
            sp.sector.index_of(1u128 << i).unwrap()
        };
        let mut amps = vec![C64::from(0.0); sp.dim()];
        amps[pick(0)] = C64::from(1.0);
        amps[pick(2)] = C64::from(1.0);
        let st = QuantumState::normalized(amps, 0.0).unwrap();
        let f = PilotField::new(&sp, &st, None, Exec::Sequential).unwrap();
        let e = 2f64.sqrt();
        let norm = (2.0 * e * (e + m)).sqrt();
        let (u0, u1) = ((e + m) / norm, 1.0 / norm);
        for g in 0..20 {
            let x = 0.05 + g as f64 * 0.3;
            // psi = [u(-1) e^{-ix} + u(1) e^{ix}] / sqrt(2 L)
            let psi = [
                C64::from_polar(u0, -x) + C64::from_polar(u0, x),
                C64::from_polar(-u1, -x) + C64::from_polar(u1, x),
            ];
            let rho = psi[0].norm_sqr() + psi[1].norm_sqr();
            let j = 2.0 * (psi[0].conj() * psi[1]).re;
            let v = f.velocity(&[x]).unwrap();
            assert!((v.v[0] - j / rho).abs() < 1e-12);
            assert!(v.v[0].abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn time_reversal_flips_velocity() {
        let sp = space_1d(2.5, 0.6, 1);
        let st = random_state(sp.dim(), 5);
        let rev = QuantumState::new(time_reverse_single(&sp, st.amplitudes()).unwrap(), 0.0).unwrap();
        let f = PilotField::new(&sp, &st, None, Exec::Sequential).unwrap();
        let r = PilotField::new(&sp, &rev, None, Exec::Sequential).unwrap();
        for &x in &[0.2, 1.1, 3.7] {
            let a = f.velocity(&[x]).unwrap();
            let b = r.velocity(&[x]).unwrap();
            assert!((a.density - b.density).abs() < 1e-13);
            assert!((a.v[0] + b.v[0]).abs() < 1e-12);
        }
    }
}
