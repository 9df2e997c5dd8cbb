//! One-body operators, Hamiltonians, interaction kernels and region weights.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::basis::ModeBasis;
use crate::fock::sector::{jw_sign, FockSector, HilbertSpace};
use crate::fock::sparse::OperatorMatrix;
use crate::modes::SpaceDim;
use crate::{CMat, Exec, C64};

const HERMITIAN_TOL: f64 = 1e-12;

fn zero() -> C64 {
    C64::from(0.0)
}

fn check_weights(basis_len: usize, w: &CMat) -> Result<()> {
    if w.nrows() != basis_len || w.ncols() != basis_len {
        return Err(Error::DimensionMismatch { expected: basis_len, found: w.nrows() });
    }
    let err = (w - w.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if err > HERMITIAN_TOL * (1.0 + w.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
        return Err(invalid(format!("one-body weights are not Hermitian (deviation {err:e})")));
    }
    Ok(())
}

fn nonzero_columns(w: &CMat) -> Vec<Vec<(usize, C64)>> {
    (0..w.nrows())
        .map(|i| (0..w.ncols()).filter(|&j| w[(i, j)] != zero()).map(|j| (j, w[(i, j)])).collect())
        .collect()
}

/// `sum_ij w_ij a_i^dagger a_j` on the fermion sector alone (no boson factor).
/// `w` need not be Hermitian here.
pub fn one_body_fermion(sector: &FockSector, w: &CMat, exec: Exec) -> Result<OperatorMatrix> {
    if w.nrows() != sector.total() || w.ncols() != sector.total() {
        return Err(Error::DimensionMismatch { expected: sector.total(), found: w.nrows() });
    }
    let cols = nonzero_columns(w);
    let rows = exec.map_range(sector.dim(), |r| {
        let rm = sector.mask(r);
        let mut row = Vec::new();
        let mut bits = rm;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let removed = rm & !(1u128 << i);
            for &(j, v) in &cols[i] {
                if j != i && rm & (1u128 << j) != 0 {
                    continue;
                }
                // a_i^dagger a_j |c> = s |r>, c = r - i + j.
                let c = removed | (1u128 << j);
                let s = jw_sign(c, j) * jw_sign(removed, i);
                let col = sector.index_of(c).expect("mask in sector");
                row.push((col, v * s));
            }
        }
        row
    });
    OperatorMatrix::from_rows(sector.dim(), sector.dim(), rows)
}

/// Applies `sum_ij w_ij a_i^dagger a_j (x) boson_op` to `psi` without
/// assembling the matrix. Only non-zero amplitudes are visited, so this is
/// cheap for sparse states in large sectors.
pub fn apply_one_body(
    sector: &FockSector,
    boson_dim: usize,
    w: &CMat,
    boson_op: Option<&CMat>,
    psi: &[C64],
    exec: Exec,
) -> Result<Vec<C64>> {
    let nb = boson_dim;
    if psi.len() != sector.dim() * nb {
        return Err(Error::DimensionMismatch { expected: sector.dim() * nb, found: psi.len() });
    }
    if w.nrows() != sector.total() {
        return Err(Error::DimensionMismatch { expected: sector.total(), found: w.nrows() });
    }
    // Column view: contributions of column j of w.
    let wt = w.transpose();
    let by_j = nonzero_columns(&wt);
    let active: Vec<usize> =
        (0..sector.dim()).filter(|&c| psi[c * nb..(c + 1) * nb].iter().any(|z| *z != zero())).collect();
    let contributions = exec.map_slice(&active, |&c| {
        let cm = sector.mask(c);
        let amp = &psi[c * nb..(c + 1) * nb];
        let boson_amp: Vec<C64> = match boson_op {
            Some(b) => (0..nb).map(|x| (0..nb).map(|y| b[(x, y)] * amp[y]).sum()).collect(),
            None => amp.to_vec(),
        };
        let mut out = Vec::new();
        let mut bits = cm;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let removed = cm & !(1u128 << j);
            let sj = jw_sign(cm, j);
            for &(i, v) in &by_j[j] {
                if i != j && removed & (1u128 << i) != 0 {
                    continue;
                }
                let r = removed | (1u128 << i);
                let s = sj * jw_sign(removed, i);
                let row = sector.index_of(r).expect("mask in sector");
                out.push((row, v * s));
            }
        }
        (out, boson_amp)
    });
    let mut y = vec![zero(); psi.len()];
    for (out, bamp) in contributions {
        for (row, f) in out {
            for (xi, a) in bamp.iter().enumerate() {
                y[row * nb + xi] += f * a;
            }
        }
    }
    Ok(y)
}

/// One-body operator with Hermitian weights, lifted to the sector (x) boson
/// space as `W (x) I`.
pub fn build_one_body_operator(space: &HilbertSpace, w: &CMat, exec: Exec) -> Result<OperatorMatrix> {
    check_weights(space.basis.len(), w)?;
    let f = one_body_fermion(&space.sector, w, exec)?;
    let mut op = f.kron_dense(&CMat::identity(space.boson.dim(), space.boson.dim()));
    op.mark_hermitian(HERMITIAN_TOL * (1.0 + op.max_row_sum()))?;
    Ok(op)
}

/// Fermion number `F_d`, weights `I`.
pub fn fermion_number_operator(space: &HilbertSpace, exec: Exec) -> Result<OperatorMatrix> {
    let n = space.basis.len();
    build_one_body_operator(space, &CMat::identity(n, n), exec)
}

/// Charge `Q`, weights `q_lambda I`.
pub fn charge_operator(space: &HilbertSpace, exec: Exec) -> Result<OperatorMatrix> {
    build_one_body_operator(space, &charge_weights(&space.basis), exec)
}

pub fn charge_weights(basis: &ModeBasis) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_fn(basis.len(), |i, _| C64::from(basis.charge(i))))
}

/// Free fermion Hamiltonian: `+E` per occupied positive mode, `-E` per
/// occupied negative mode.
pub fn build_free_hamiltonian(space: &HilbertSpace) -> OperatorMatrix {
    let eps: Vec<f64> = (0..space.basis.len()).map(|i| space.basis.energy(i)).collect();
    let nb = space.boson.dim();
    let mut diag = Vec::with_capacity(space.dim());
    for &m in space.sector.masks() {
        let mut e = 0.0;
        let mut bits = m;
        while bits != 0 {
            e += eps[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        diag.extend(std::iter::repeat_n(C64::from(e), nb));
    }
    OperatorMatrix::diagonal(&diag)
}

/// Free boson term `omega b^dagger b`.
pub fn build_boson_hamiltonian(space: &HilbertSpace, omega: f64) -> OperatorMatrix {
    let nb = space.boson.dim();
    let diag: Vec<C64> = (0..space.dim()).map(|k| C64::from(omega * (k % nb) as f64)).collect();
    OperatorMatrix::diagonal(&diag)
}

// ---------------------------------------------------------------------------
// Interaction kernels
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelKind {
    /// `g beta`, diagonal in species.
    Yukawa,
    /// `g q_lambda I`.
    EmLike,
    /// `g beta` coupling species `first` and `second` only.
    FlavorFlip { first: usize, second: usize },
    /// Explicit `(species * spinor)^2` matrix of `[re, im]` pairs, scaled by `g`.
    Custom { matrix: Vec<Vec<[f64; 2]>> },
}

/// Spatial factor `f(x)` multiplying the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpatialProfile {
    Uniform,
    /// `cos(2 pi h x_1 / L)`.
    Cosine { harmonic: i64 },
}

/// How the position integral of the kernel is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelQuadrature {
    Exact,
    /// Uniform grid of `points` per axis; the kernel is then diagonal on
    /// those grid points.
    Grid { points: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionKernel {
    pub kind: KernelKind,
    pub coupling: f64,
    #[serde(default = "default_profile")]
    pub profile: SpatialProfile,
    #[serde(default = "default_quadrature")]
    pub quadrature: KernelQuadrature,
}

fn default_profile() -> SpatialProfile {
    SpatialProfile::Uniform
}

fn default_quadrature() -> KernelQuadrature {
    KernelQuadrature::Exact
}

impl InteractionKernel {
    pub fn yukawa(coupling: f64) -> Self {
        InteractionKernel {
            kind: KernelKind::Yukawa,
            coupling,
            profile: SpatialProfile::Uniform,
            quadrature: KernelQuadrature::Exact,
        }
    }

    pub fn with_profile(mut self, profile: SpatialProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_quadrature(mut self, quadrature: KernelQuadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    /// Local kernel matrix on species (x) spinor, including the coupling.
    pub fn local_matrix(&self, basis: &ModeBasis) -> Result<CMat> {
        let ns = basis.species().len();
        let sd = basis.spinor_dim();
        let nc = ns * sd;
        let beta = basis.spinors().algebra().beta().clone();
        let g = C64::from(self.coupling);
        let mut k = CMat::zeros(nc, nc);
        match &self.kind {
            KernelKind::Yukawa => {
                for s in 0..ns {
                    k.view_mut((s * sd, s * sd), (sd, sd)).copy_from(&(&beta * g));
                }
            }
            KernelKind::EmLike => {
                for s in 0..ns {
                    let q = basis.species().get(s).charge;
                    for a in 0..sd {
                        k[(s * sd + a, s * sd + a)] = g * q;
                    }
                }
            }
            KernelKind::FlavorFlip { first, second } => {
                let (a, b) = (*first, *second);
                if a >= ns || b >= ns || a == b {
                    return Err(invalid(format!("flavor-flip species pair ({a}, {b}) invalid for {ns} species")));
                }
                k.view_mut((a * sd, b * sd), (sd, sd)).copy_from(&(&beta * g));
                k.view_mut((b * sd, a * sd), (sd, sd)).copy_from(&(&beta * g));
            }
            KernelKind::Custom { matrix } => {
                if matrix.len() != nc || matrix.iter().any(|r| r.len() != nc) {
                    return Err(Error::DimensionMismatch { expected: nc, found: matrix.len() });
                }
                for (r, row) in matrix.iter().enumerate() {
                    for (c, z) in row.iter().enumerate() {
                        k[(r, c)] = g * C64::new(z[0], z[1]);
                    }
                }
            }
        }
        let err = (&k - k.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > HERMITIAN_TOL {
            return Err(invalid(format!("interaction kernel is not Hermitian (deviation {err:e})")));
        }
        Ok(k)
    }

    /// `(1/V) int f(x) e^{i (p_j - p_i).x} dx` for wave-vector difference `dn`.
    fn profile_factor(&self, dn: [i64; 3], dim: SpaceDim) -> f64 {
        let d = dim.get();
        let hits = |shift: i64| -> bool {
            (0..d).all(|k| {
                let v = dn[k] + if k == 0 { shift } else { 0 };
                match self.quadrature {
                    KernelQuadrature::Exact => v == 0,
                    KernelQuadrature::Grid { points } => v.rem_euclid(points as i64) == 0,
                }
            })
        };
        match self.profile {
            SpatialProfile::Uniform => {
                if hits(0) {
                    1.0
                } else {
                    0.0
                }
            }
            SpatialProfile::Cosine { harmonic } => {
                0.5 * (hits(harmonic) as i32 as f64) + 0.5 * (hits(-harmonic) as i32 as f64)
            }
        }
    }

    /// Single-particle weights `w_ij = <w_i|K|w_j> S(p_i, p_j)`.
    pub fn weights(&self, basis: &ModeBasis) -> Result<CMat> {
        if let KernelQuadrature::Grid { points } = self.quadrature {
            if points == 0 {
                return Err(invalid("kernel quadrature grid needs at least one point"));
            }
        }
        let k = self.local_matrix(basis)?;
        let sd = basis.spinor_dim();
        let n = basis.len();
        let dim = basis.lattice().dim();
        let mut w = CMat::zeros(n, n);
        for i in 0..n {
            let li = basis.label(i);
            for j in 0..n {
                let s = self.profile_factor(basis.wave_difference(i, j), dim);
                if s == 0.0 {
                    continue;
                }
                let lj = basis.label(j);
                let (wi, wj) = (basis.spinor(i), basis.spinor(j));
                let mut acc = zero();
                for a in 0..sd {
                    for b in 0..sd {
                        acc += wi[a].conj() * k[(li.species * sd + a, lj.species * sd + b)] * wj[b];
                    }
                }
                w[(i, j)] = acc * s;
            }
        }
        Ok(w)
    }
}

/// Interaction `H_I = sum_ij w_ij a_i^dagger a_j (x) (b + b^dagger)/sqrt 2`.
pub fn build_interaction(space: &HilbertSpace, kernel: &InteractionKernel, exec: Exec) -> Result<OperatorMatrix> {
    let w = kernel.weights(&space.basis)?;
    check_weights(space.basis.len(), &w)?;
    let f = one_body_fermion(&space.sector, &w, exec)?;
    let mut op = f.kron_dense(&space.boson.coupling());
    op.mark_hermitian(HERMITIAN_TOL * (1.0 + op.max_row_sum()))?;
    Ok(op)
}

/// `H_0^F + omega b^dagger b + H_I`.
pub fn build_hamiltonian(
    space: &HilbertSpace,
    kernel: Option<&InteractionKernel>,
    omega: f64,
    exec: Exec,
) -> Result<OperatorMatrix> {
    let mut h = build_free_hamiltonian(space);
    if space.boson.dim() > 1 {
        h = h.add(&build_boson_hamiltonian(space, omega))?;
    }
    if let Some(k) = kernel {
        h = h.add(&build_interaction(space, k, exec)?)?;
    }
    h.mark_hermitian(HERMITIAN_TOL * (1.0 + h.max_row_sum()))?;
    Ok(h)
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

/// Spatial region of the box, used for `F_d(B)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    /// The whole box.
    Whole,
    /// `[a, b]` on the circle, `a <= b <= a + L` (d = 1).
    Interval { a: f64, b: f64 },
    /// Axis-aligned box `[lo, hi]` (d = 3), each side at most `L`.
    Cuboid { lo: [f64; 3], hi: [f64; 3] },
    /// Ball of radius `< L/2` (d = 3).
    Ball { center: [f64; 3], radius: f64 },
    /// Box minus the inner region.
    Complement { inner: Box<Region> },
}

/// `int_a^b e^{i k x} dx`.
fn segment_integral(k: f64, a: f64, b: f64) -> C64 {
    if k == 0.0 {
        C64::from(b - a)
    } else {
        (C64::from_polar(1.0, k * b) - C64::from_polar(1.0, k * a)) / C64::new(0.0, k)
    }
}

/// `int_{|x - c| <= R} e^{i k.x} d^3x`.
fn ball_integral(k: [f64; 3], center: [f64; 3], r: f64) -> C64 {
    let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let kr = kn * r;
    let radial = if kr < 1e-3 {
        4.0 * PI * r.powi(3) / 3.0 * (1.0 - kr * kr / 10.0 + kr.powi(4) / 280.0)
    } else {
        4.0 * PI * (kr.sin() - kr * kr.cos()) / kn.powi(3)
    };
    C64::from_polar(radial, k[0] * center[0] + k[1] * center[1] + k[2] * center[2])
}

impl Region {
    pub fn complement(self) -> Region {
        Region::Complement { inner: Box::new(self) }
    }

    /// Volume of the region inside a box of side `box_len`.
    pub fn volume(&self, dim: SpaceDim, box_len: f64) -> f64 {
        let full = box_len.powi(dim.get() as i32);
        match self {
            Region::Whole => full,
            Region::Interval { a, b } => b - a,
            Region::Cuboid { lo, hi } => (0..3).map(|k| hi[k] - lo[k]).product(),
            Region::Ball { radius, .. } => 4.0 * PI * radius.powi(3) / 3.0,
            Region::Complement { inner } => full - inner.volume(dim, box_len),
        }
    }

    fn validate(&self, dim: SpaceDim, box_len: f64) -> Result<()> {
        let bad = |m: &str| Err(invalid(format!("region: {m}")));
        match (self, dim) {
            (Region::Whole, _) => Ok(()),
            (Region::Interval { a, b }, SpaceDim::One) => {
                if !(a <= b) || b - a > box_len {
                    return bad("interval needs a <= b <= a + L");
                }
                Ok(())
            }
            (Region::Cuboid { lo, hi }, SpaceDim::Three) => {
                if (0..3).any(|k| !(lo[k] <= hi[k]) || hi[k] - lo[k] > box_len) {
                    return bad("cuboid sides must satisfy lo <= hi <= lo + L");
                }
                Ok(())
            }
            (Region::Ball { radius, .. }, SpaceDim::Three) => {
                if !(*radius >= 0.0) || *radius >= box_len / 2.0 {
                    return bad("ball radius must lie in [0, L/2)");
                }
                Ok(())
            }
            (Region::Complement { inner }, _) => inner.validate(dim, box_len),
            _ => bad("region shape does not match the spatial dimension"),
        }
    }

    /// `(1/V) int_B e^{i k.x} dx`.
    fn fourier(&self, k: [f64; 3], dim: SpaceDim, box_len: f64) -> C64 {
        let vol = box_len.powi(dim.get() as i32);
        match self {
            Region::Whole => {
                if k.iter().all(|&c| c == 0.0) {
                    C64::from(1.0)
                } else {
                    zero()
                }
            }
            Region::Interval { a, b } => segment_integral(k[0], *a, *b) / vol,
            Region::Cuboid { lo, hi } => (0..3).map(|c| segment_integral(k[c], lo[c], hi[c])).product::<C64>() / vol,
            Region::Ball { center, radius } => ball_integral(k, *center, *radius) / vol,
            Region::Complement { inner } => {
                Region::Whole.fourier(k, dim, box_len) - inner.fourier(k, dim, box_len)
            }
        }
    }
}

/// One-body weights of `F_d(B)`: `w_ij = int_B phi_i^dagger(x) phi_j(x) dx`.
pub fn region_weights(basis: &ModeBasis, region: &Region) -> Result<CMat> {
    let dim = basis.lattice().dim();
    let l = basis.lattice().box_len();
    region.validate(dim, l)?;
    let n = basis.len();
    let mut w = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let ov = basis.spinor_overlap(i, j);
            if ov == zero() {
                continue;
            }
            w[(i, j)] = ov * region.fourier(basis.momentum_difference(i, j), dim, l);
        }
    }
    Ok(w)
}

/// Weights of the fermion-number density at `x`:
/// `w_ij = phi_i^dagger(x) phi_j(x) = w_i^dagger w_j e^{i (p_j - p_i).x} / V`.
pub fn density_weights(basis: &ModeBasis, x: &[f64]) -> CMat {
    let n = basis.len();
    let d = basis.lattice().dim().get();
    let vol = basis.lattice().volume();
    let mut w = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let ov = basis.spinor_overlap(i, j);
            if ov == zero() {
                continue;
            }
            let dp = basis.momentum_difference(i, j);
            let arg: f64 = (0..d).map(|k| dp[k] * x[k]).sum();
            w[(i, j)] = ov * C64::from_polar(1.0 / vol, arg);
        }
    }
    w
}

/// Single-particle projector onto the mode content of grid point `g` of a
/// uniform grid with `points` per axis: `(V / N^d)` times the density weights.
pub fn grid_point_weights(basis: &ModeBasis, points: usize, g: &[usize]) -> CMat {
    let l = basis.lattice().box_len();
    let d = basis.lattice().dim().get();
    let x: Vec<f64> = g.iter().take(d).map(|&k| k as f64 * l / points as f64).collect();
    let cell = basis.lattice().volume() / (points as f64).powi(d as i32);
    density_weights(basis, &x) * C64::from(cell)
}

/// `C_I = n0^2` and `C_II = sum_{i neg, j pos} |w_ij|^2` for the Dirac sea,
/// with `n0 = sum_{i neg} w_ii`.
pub fn sea_second_moment_terms(basis: &ModeBasis, w: &CMat) -> (f64, f64) {
    let neg = basis.indices_in_band(crate::fock::basis::Band::Negative);
    let pos = basis.indices_in_band(crate::fock::basis::Band::Positive);
    let n0: f64 = neg.iter().map(|&i| w[(i, i)].re).sum();
    let c2: f64 = neg.iter().flat_map(|&i| pos.iter().map(move |&j| w[(i, j)].norm_sqr())).sum();
    (n0 * n0, c2)
}

/// Variance of a one-body operator in a Slater determinant with occupied
/// orthonormal orbitals given as columns of `orbitals` (in the mode basis):
/// `Tr(P W (1 - P) W)`.
pub fn slater_one_body_variance(orbitals: &CMat, w: &CMat) -> f64 {
    let p = orbitals * orbitals.adjoint();
    let id = CMat::identity(p.nrows(), p.ncols());
    (&p * w * (id - &p) * w).trace().re
}

/// Expectation of a one-body operator in a Slater determinant: `Tr(P W)`.
pub fn slater_one_body_mean(orbitals: &CMat, w: &CMat) -> f64 {
    (orbitals.adjoint() * w * orbitals).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::sector::BosonSpace;
    use crate::fock::sparse::commutator_norm;
    use crate::modes::{build_mode_lattice, SpeciesTable};

    fn basis_1d(l: f64, cutoff: f64, mass: f64) -> ModeBasis {
        ModeBasis::build(build_mode_lattice(SpaceDim::One, l, cutoff).unwrap(), SpeciesTable::single(mass)).unwrap()
    }

    #[test]
    fn one_body_matches_dense_ladder_products() {
        // Oracle: sum_ij w_ij a_i^dagger a_j from full-space ladder matrices.
        let total = 5;
        let mut w = CMat::zeros(total, total);
        for i in 0..total {
            for j in 0..total {
                w[(i, j)] = C64::new((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.07);
            }
        }
        let dim = 1 << total;
        let mut dense = CMat::zeros(dim, dim);
        let cr: Vec<CMat> =
            (0..total).map(|i| crate::fock::sector::full_fock_creation(i, total).unwrap().to_dense()).collect();
        for i in 0..total {
            for j in 0..total {
                dense += &cr[i] * cr[j].adjoint() * w[(i, j)];
            }
        }
        for n in 0..=total {
            let s = FockSector::new(total, n, 1).unwrap();
            let op = one_body_fermion(&s, &w, Exec::Parallel).unwrap();
            for (r, &mr) in s.masks().iter().enumerate() {
                for (c, &mc) in s.masks().iter().enumerate() {
                    assert!((op.get(r, c) - dense[(mr as usize, mc as usize)]).norm() < 1e-14);
                }
            }
            // Matrix-free application agrees.
            let psi: Vec<C64> = (0..s.dim()).map(|k| C64::new(k as f64 * 0.3 - 1.0, 0.2)).collect();
            let a = op.apply(&psi, Exec::Sequential).unwrap();
            let b = apply_one_body(&s, 1, &w, None, &psi, Exec::Parallel).unwrap();
            for k in 0..s.dim() {
                assert!((a[k] - b[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn free_hamiltonian_spectrum() {
        let b = basis_1d(2.0 * PI, 1.5, 1.0);
        let neg = b.indices_in_band(crate::fock::basis::Band::Negative).len();
        let space = HilbertSpace::new(b.clone(), neg, BosonSpace::none()).unwrap();
        let h = build_free_hamiltonian(&space);
        let sea = space.sector.index_of(b.sea_mask()).unwrap();
        let e_sea: f64 = -(0..b.len()).filter(|&i| b.energy(i) < 0.0).map(|i| -b.energy(i)).sum::<f64>();
        assert!((h.get(sea, sea).re - e_sea).abs() < 1e-13);
        assert!((e_sea + 1.0 + 2.0 * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn kernel_weights_match_slow_oracle() {
        let b = basis_1d(2.0 * PI, 1.5, 0.8);
        let k = InteractionKernel::yukawa(0.3);
        let w = k.weights(&b).unwrap();
        let beta = b.spinors().algebra().beta().clone();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let mut expect = zero();
                if b.label(i).momentum == b.label(j).momentum {
                    let wi = nalgebra::DVector::from_column_slice(b.spinor(i));
                    let wj = nalgebra::DVector::from_column_slice(b.spinor(j));
                    expect = wi.dotc(&(&beta * wj)) * 0.3;
                }
                assert!((w[(i, j)] - expect).norm() < 1e-15);
            }
        }
        let space = HilbertSpace::new(b, 2, BosonSpace::new(2).unwrap()).unwrap();
        let hi = build_interaction(&space, &k, Exec::Parallel).unwrap();
        assert!(hi.is_hermitian());
        let f = fermion_number_operator(&space, Exec::Parallel).unwrap();
        assert!(commutator_norm(&f, &hi, Exec::Parallel).unwrap() < 1e-12);
    }

    #[test]
    fn non_hermitian_kernel_rejected() {
        let b = basis_1d(2.0 * PI, 0.5, 1.0);
        let k = InteractionKernel {
            kind: KernelKind::Custom { matrix: vec![vec![[0.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]] },
            coupling: 1.0,
            profile: SpatialProfile::Uniform,
            quadrature: KernelQuadrature::Exact,
        };
        assert!(matches!(k.weights(&b), Err(Error::InvalidParameter(_))));
        let space = HilbertSpace::new(b.clone(), 1, BosonSpace::none()).unwrap();
        let mut w = CMat::zeros(2, 2);
        w[(0, 1)] = C64::from(1.0);
        assert!(build_one_body_operator(&space, &w, Exec::Sequential).is_err());
    }

    #[test]
    fn region_weights_additivity_and_whole_box() {
        let b = basis_1d(2.0 * PI, 3.5, 0.5);
        let whole = region_weights(&b, &Region::Whole).unwrap();
        assert!((whole - CMat::identity(b.len(), b.len())).norm() < 1e-14);
        let r = Region::Interval { a: 0.4, b: 2.9 };
        let rc = Region::Interval { a: 2.9, b: 0.4 + 2.0 * PI };
        let sum = region_weights(&b, &r).unwrap() + region_weights(&b, &rc).unwrap();
        assert!((sum - CMat::identity(b.len(), b.len())).norm() < 1e-13);
        assert!(region_weights(&b, &Region::Ball { center: [0.0; 3], radius: 1.0 }).is_err());
    }

    #[test]
    fn region_weights_match_grid_quadrature() {
        // Oracle: midpoint-free trapezoid quadrature of phi_i^dagger phi_j over
        // the region; exact for trigonometric integrands on full periods, so use
        // many points on a sub-interval instead.
        let b = basis_1d(2.0 * PI, 2.5, 1.0);
        let (a0, b0) = (0.3, 2.2);
        let w = region_weights(&b, &Region::Interval { a: a0, b: b0 }).unwrap();
        let n = 4000;
        let h = (b0 - a0) / n as f64;
        let nc = b.components();
        let mut q = CMat::zeros(b.len(), b.len());
        for g in 0..=n {
            let x = a0 + g as f64 * h;
            let wt = if g == 0 || g == n { 0.5 * h } else { h };
            let v = b.mode_values(&[x]);
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let s: C64 = (0..nc).map(|c| v[i * nc + c].conj() * v[j * nc + c]).sum();
                    q[(i, j)] += s * wt;
                }
            }
        }
        assert!((w - q).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-6);
    }

    #[test]
    fn ball_and_cuboid_weights_3d() {
        let lat = build_mode_lattice(SpaceDim::Three, 4.0, 1.6).unwrap();
        let b = ModeBasis::build(lat, SpeciesTable::single(1.0)).unwrap();
        let ball = Region::Ball { center: [1.0, 2.0, 0.5], radius: 1.3 };
        let w = region_weights(&b, &ball).unwrap();
        let vfrac = ball.volume(SpaceDim::Three, 4.0) / 64.0;
        for i in 0..b.len() {
            assert!((w[(i, i)].re - vfrac).abs() < 1e-14);
        }
        assert!((&w - w.adjoint()).norm() < 1e-14);
        let cub = Region::Cuboid { lo: [0.0, 0.0, 0.0], hi: [4.0, 4.0, 2.0] };
        let wc = region_weights(&b, &cub).unwrap();
        let wcc = region_weights(&b, &Region::Cuboid { lo: [0.0, 0.0, 2.0], hi: [4.0, 4.0, 4.0] }).unwrap();
        assert!((wc + wcc - CMat::identity(b.len(), b.len())).norm() < 1e-13);
        // Radial Simpson quadrature of 4 pi r^2 sin(kr)/(kr).
        for &k in &[1e-5, 5e-4, 0.7, 3.0] {
            let r = 1.3;
            let n = 2000;
            let h = r / n as f64;
            let f = |x: f64| if x == 0.0 { 0.0 } else { 4.0 * PI * x * x * (k * x).sin() / (k * x) };
            let simpson: f64 = (0..=n)
                .map(|g| {
                    let wt = if g == 0 || g == n { 1.0 } else if g % 2 == 1 { 4.0 } else { 2.0 };
                    wt * f(g as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0;
            let exact = ball_integral([k, 0.0, 0.0], [0.0; 3], r);
            assert!((exact.re - simpson).abs() < 1e-10, "k={k}");
        }
    }
}
