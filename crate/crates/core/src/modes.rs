//! Single-particle structure on a periodic box: the momentum lattice below a
//! cut-off, the Dirac matrices, plane-wave spinors and the band-limited delta
//! function.
//!
//! Units are natural (`hbar = c = 1`): lengths in meters, momenta and masses
//! in inverse meters.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::{CMat, C64};

/// `hbar * c` in eV m, for converting masses given in eV to inverse meters.
pub const HBAR_C_EV_M: f64 = 1.973_269_804e-7;

/// Converts an energy in eV to an inverse length in 1/m.
pub fn ev_to_inverse_meters(ev: f64) -> f64 {
    ev / HBAR_C_EV_M
}

/// Converts an inverse length in 1/m to an energy in eV.
pub fn inverse_meters_to_ev(k: f64) -> f64 {
    k * HBAR_C_EV_M
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceDim {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "3")]
    Three,
}

impl SpaceDim {
    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            1 => Ok(SpaceDim::One),
            3 => Ok(SpaceDim::Three),
            _ => Err(invalid(format!("spatial dimension must be 1 or 3, got {d}"))),
        }
    }

    pub fn get(self) -> usize {
        match self {
            SpaceDim::One => 1,
            SpaceDim::Three => 3,
        }
    }

    /// Number of spinor components: 2 in one dimension, 4 in three.
    pub fn spinor_dim(self) -> usize {
        2 * self.spins()
    }

    /// Number of spin labels per energy band.
    pub fn spins(self) -> usize {
        match self {
            SpaceDim::One => 1,
            SpaceDim::Three => 2,
        }
    }
}

// ---------------------------------------------------------------------------
// Species
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: String,
    /// Mass in 1/m.
    pub mass: f64,
    /// Charge in units of the elementary charge.
    pub charge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Species>", into = "Vec<Species>")]
pub struct SpeciesTable {
    entries: Vec<Species>,
}

impl TryFrom<Vec<Species>> for SpeciesTable {
    type Error = crate::Error;
    fn try_from(v: Vec<Species>) -> Result<Self> {
        SpeciesTable::new(v)
    }
}

impl From<SpeciesTable> for Vec<Species> {
    fn from(t: SpeciesTable) -> Self {
        t.entries
    }
}

impl SpeciesTable {
    pub fn new(entries: Vec<Species>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("species table is empty"));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &entries {
            if !seen.insert(s.id.as_str()) {
                return Err(invalid(format!("duplicate species id `{}`", s.id)));
            }
            if !(s.mass >= 0.0) || !s.mass.is_finite() {
                return Err(invalid(format!("species `{}` has invalid mass {}", s.id, s.mass)));
            }
            if !s.charge.is_finite() {
                return Err(invalid(format!("species `{}` has invalid charge", s.id)));
            }
        }
        Ok(SpeciesTable { entries })
    }

    /// A single species of the given mass and unit negative charge.
    pub fn single(mass: f64) -> Self {
        SpeciesTable::new(vec![Species { id: "f".into(), mass, charge: -1.0 }])
            .expect("single species with non-negative mass")
    }

    /// The 24 fermion species of the Standard Model: six quark flavours in
    /// three colours plus six leptons. Neutrinos are Dirac particles of mass
    /// `neutrino_mass_ev`.
    pub fn standard_model(neutrino_mass_ev: f64) -> Self {
        // Masses in MeV.
        let quarks = [
            ("u", 2.16, 2.0 / 3.0),
            ("d", 4.67, -1.0 / 3.0),
            ("s", 93.4, -1.0 / 3.0),
            ("c", 1270.0, 2.0 / 3.0),
            ("b", 4180.0, -1.0 / 3.0),
            ("t", 172_690.0, 2.0 / 3.0),
        ];
        let leptons = [
            ("e", 0.510_998_95, -1.0),
            ("mu", 105.658_375, -1.0),
            ("tau", 1776.86, -1.0),
        ];
        let mut entries = Vec::with_capacity(24);
        for (q, mev, charge) in quarks {
            for colour in ["r", "g", "b"] {
                entries.push(Species {
                    id: format!("{q}_{colour}"),
                    mass: ev_to_inverse_meters(mev * 1e6),
                    charge,
                });
            }
        }
        for (l, mev, charge) in leptons {
            entries.push(Species { id: l.into(), mass: ev_to_inverse_meters(mev * 1e6), charge });
            entries.push(Species {
                id: format!("nu_{l}"),
                mass: ev_to_inverse_meters(neutrino_mass_ev),
                charge: 0.0,
            });
        }
        SpeciesTable::new(entries).expect("standard model table is valid")
    }

    /// Parses a table from TOML of the form
    ///
    /// ```toml
    /// [[species]]
    /// id = "e"
    /// mass = "2.5896e12"
    /// charge = "-1"
    /// ```
    ///
    /// Masses (1/m) and charges are decimal strings.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Row {
            id: String,
            mass: String,
            charge: String,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            species: Vec<Row>,
        }
        let file: File =
            toml::from_str(text).map_err(|e| crate::Error::Format(format!("species table: {e}")))?;
        let parse = |id: &str, field: &str, s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("species `{id}`: {field} `{s}` is not a decimal number")))
        };
        let entries = file
            .species
            .iter()
            .map(|r| {
                Ok(Species {
                    id: r.id.clone(),
                    mass: parse(&r.id, "mass", &r.mass)?,
                    charge: parse(&r.id, "charge", &r.charge)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SpeciesTable::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> &Species {
        &self.entries[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Species> {
        self.entries.iter()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|s| s.id == id)
    }
}

// ---------------------------------------------------------------------------
// Momentum lattice
// ---------------------------------------------------------------------------

/// Momenta `p = 2 pi n / L` with `|p| <= cutoff` on a periodic box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeLattice {
    dim: SpaceDim,
    box_len: f64,
    cutoff: f64,
    /// Integer wave vectors, lexicographically ordered. Unused components are 0.
    integers: Vec<[i64; 3]>,
    #[serde(skip)]
    lookup: HashMap<[i64; 3], usize>,
}

impl PartialEq for ModeLattice {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.box_len == other.box_len
            && self.cutoff == other.cutoff
            && self.integers == other.integers
    }
}

/// Builds the lattice of all box momenta below the cut-off.
pub fn build_mode_lattice(dim: SpaceDim, box_len: f64, cutoff: f64) -> Result<ModeLattice> {
    if !(box_len > 0.0) || !box_len.is_finite() {
        return Err(invalid(format!("box length must be positive, got {box_len}")));
    }
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(invalid(format!("cutoff must be positive, got {cutoff}")));
    }
    let unit = 2.0 * PI / box_len;
    let nmax = (cutoff / unit + 1e-9).floor() as i64;
    if nmax > 10_000 {
        return Err(invalid(format!("cutoff * L / 2pi = {nmax} is too large for a lattice")));
    }
    // Relative slack so that momenta sitting exactly on the cut-off are kept.
    let bound = (cutoff / unit).powi(2) * (1.0 + 1e-12);
    let range = -nmax..=nmax;
    let mut integers = Vec::new();
    match dim {
        SpaceDim::One => {
            for n in range {
                if ((n * n) as f64) <= bound {
                    integers.push([n, 0, 0]);
                }
            }
        }
        SpaceDim::Three => {
            for a in range.clone() {
                for b in range.clone() {
                    for c in range.clone() {
                        if ((a * a + b * b + c * c) as f64) <= bound {
                            integers.push([a, b, c]);
                        }
                    }
                }
            }
        }
    }
    Ok(ModeLattice::from_integers(dim, box_len, cutoff, integers))
}

impl ModeLattice {
    fn from_integers(dim: SpaceDim, box_len: f64, cutoff: f64, mut integers: Vec<[i64; 3]>) -> Self {
        integers.sort();
        let lookup = integers.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        ModeLattice { dim, box_len, cutoff, integers, lookup }
    }

    /// Rebuilds the lookup table after deserialisation.
    pub fn reindex(&mut self) {
        self.lookup = self.integers.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    }

    pub fn dim(&self) -> SpaceDim {
        self.dim
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Number of momenta `M`.
    pub fn len(&self) -> usize {
        self.integers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.integers.is_empty()
    }

    /// Box volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dim.get() as i32)
    }

    pub fn integer(&self, i: usize) -> [i64; 3] {
        self.integers[i]
    }

    pub fn integers(&self) -> &[[i64; 3]] {
        &self.integers
    }

    pub fn momentum(&self, i: usize) -> [f64; 3] {
        let unit = 2.0 * PI / self.box_len;
        let n = self.integers[i];
        [unit * n[0] as f64, unit * n[1] as f64, unit * n[2] as f64]
    }

    pub fn index_of(&self, n: [i64; 3]) -> Option<usize> {
        self.lookup.get(&n).copied()
    }

    /// Index of `-p`.
    pub fn negate(&self, i: usize) -> usize {
        let n = self.integers[i];
        self.lookup[&[-n[0], -n[1], -n[2]]]
    }

    /// Largest integer component magnitude among the momenta.
    pub fn max_integer(&self) -> i64 {
        self.integers.iter().flat_map(|n| n.iter().map(|c| c.abs())).max().unwrap_or(0)
    }

    /// Reduces a coordinate into `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let r = x.rem_euclid(self.box_len);
        if r >= self.box_len {
            0.0
        } else {
            r
        }
    }

    /// Phases `e^{i p.x}` for every lattice momentum.
    pub fn phases(&self, x: &[f64]) -> Vec<C64> {
        let d = self.dim.get();
        let unit = 2.0 * PI / self.box_len;
        self.integers
            .iter()
            .map(|n| {
                let mut arg = 0.0;
                for k in 0..d {
                    arg += n[k] as f64 * x[k];
                }
                C64::from_polar(1.0, unit * arg)
            })
            .collect()
    }
}

/// Band-limited delta function `(1/L^d) sum_p e^{i p.x}`.
pub fn delta_cutoff(x: &[f64], lattice: &ModeLattice) -> f64 {
    let d = lattice.dim().get();
    let unit = 2.0 * PI / lattice.box_len();
    let wrapped: Vec<f64> = x.iter().take(d).map(|&c| lattice.wrap(c)).collect();
    let sum: f64 = lattice
        .integers()
        .iter()
        .map(|n| {
            let arg: f64 = (0..d).map(|k| n[k] as f64 * wrapped[k]).sum();
            (unit * arg).cos()
        })
        .sum();
    sum / lattice.volume()
}

// ---------------------------------------------------------------------------
// Dirac algebra and spinors
// ---------------------------------------------------------------------------

/// Dirac matrices: `alpha = sigma_1`, `beta = sigma_3` in one dimension and
/// the standard Dirac representation in three.
#[derive(Clone, Debug)]
pub struct DiracAlgebra {
    dim: SpaceDim,
    alpha: Vec<CMat>,
    beta: CMat,
}

impl DiracAlgebra {
    pub fn new(dim: SpaceDim) -> Self {
        let c = |re: f64, im: f64| C64::new(re, im);
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        let sigma = [
            CMat::from_row_slice(2, 2, &[z, one, one, z]),
            CMat::from_row_slice(2, 2, &[z, -i, i, z]),
            CMat::from_row_slice(2, 2, &[one, z, z, -one]),
        ];
        match dim {
            SpaceDim::One => DiracAlgebra { dim, alpha: vec![sigma[0].clone()], beta: sigma[2].clone() },
            SpaceDim::Three => {
                let alpha = sigma
                    .iter()
                    .map(|s| {
                        let mut a = CMat::zeros(4, 4);
                        a.view_mut((0, 2), (2, 2)).copy_from(s);
                        a.view_mut((2, 0), (2, 2)).copy_from(s);
                        a
                    })
                    .collect();
                let mut beta = CMat::identity(4, 4);
                beta[(2, 2)] = -one;
                beta[(3, 3)] = -one;
                DiracAlgebra { dim, alpha, beta }
            }
        }
    }

    pub fn dim(&self) -> SpaceDim {
        self.dim
    }

    pub fn spinor_dim(&self) -> usize {
        self.dim.spinor_dim()
    }

    pub fn alpha(&self, i: usize) -> &CMat {
        &self.alpha[i]
    }

    pub fn alphas(&self) -> &[CMat] {
        &self.alpha
    }

    pub fn beta(&self) -> &CMat {
        &self.beta
    }

    /// One-particle Dirac Hamiltonian `alpha.p + beta m`.
    pub fn hamiltonian(&self, p: &[f64; 3], mass: f64) -> CMat {
        let mut h = &self.beta * C64::from(mass);
        for (k, a) in self.alpha.iter().enumerate() {
            h += a * C64::from(p[k]);
        }
        h
    }
}

/// Unit-normalised spinors for one `(species, momentum)` pair.
///
/// `positive[s]` solves `(alpha.p + beta m) u = +E u`; `negative[s]` is the
/// spinor `v_s(-p)` attached to the negative-energy mode of momentum label
/// `p`, solving `(alpha.p + beta m) v = -E v`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpinor {
    pub energy: f64,
    pub positive: Vec<Vec<C64>>,
    pub negative: Vec<Vec<C64>>,
}

/// Plane-wave spinors for momentum `p` and mass `mass`.
///
/// Phase convention: the largest-magnitude component (first one on ties) is
/// real and positive. For `m = 0, p = 0` the eigenbasis of `beta` is used.
pub fn dirac_spinors(mass: f64, p: &[f64; 3], algebra: &DiracAlgebra) -> ModeSpinor {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let energy = (p2 + mass * mass).sqrt();
    let epm = energy + mass;
    let c = C64::from;
    let (positive, negative) = match algebra.dim() {
        SpaceDim::One => {
            if epm == 0.0 {
                (vec![vec![c(1.0), c(0.0)]], vec![vec![c(0.0), c(1.0)]])
            } else {
                (vec![vec![c(epm), c(p[0])]], vec![vec![c(-p[0]), c(epm)]])
            }
        }
        SpaceDim::Three => {
            if epm == 0.0 {
                let e = |k: usize| (0..4).map(|j| c(if j == k { 1.0 } else { 0.0 })).collect::<Vec<_>>();
                (vec![e(0), e(1)], vec![e(2), e(3)])
            } else {
                // sigma.p acting on the basis spinors chi_0 = (1,0), chi_1 = (0,1).
                let sp = [
                    [C64::new(p[2], 0.0), C64::new(p[0], -p[1])],
                    [C64::new(p[0], p[1]), C64::new(-p[2], 0.0)],
                ];
                let mut pos = Vec::with_capacity(2);
                let mut neg = Vec::with_capacity(2);
                for s in 0..2 {
                    let chi = [c(if s == 0 { 1.0 } else { 0.0 }), c(if s == 1 { 1.0 } else { 0.0 })];
                    let spchi = [sp[0][s], sp[1][s]];
                    pos.push(vec![chi[0] * epm, chi[1] * epm, spchi[0], spchi[1]]);
                    neg.push(vec![-spchi[0], -spchi[1], chi[0] * epm, chi[1] * epm]);
                }
                (pos, neg)
            }
        }
    };
    let fix = |mut v: Vec<C64>| {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= norm;
        }
        let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lead = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).copied().unwrap();
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
        v
    };
    ModeSpinor {
        energy,
        positive: positive.into_iter().map(fix).collect(),
        negative: negative.into_iter().map(fix).collect(),
    }
}

/// Spinors and energies for every species and lattice momentum.
#[derive(Clone, Debug)]
pub struct ModeSpinors {
    lattice: ModeLattice,
    species: SpeciesTable,
    algebra: DiracAlgebra,
    /// Indexed `[species * M + momentum]`.
    entries: Vec<ModeSpinor>,
}

impl ModeSpinors {
    pub fn build(lattice: ModeLattice, species: SpeciesTable) -> Self {
        let algebra = DiracAlgebra::new(lattice.dim());
        let mut entries = Vec::with_capacity(species.len() * lattice.len());
        for s in species.iter() {
            for i in 0..lattice.len() {
                entries.push(dirac_spinors(s.mass, &lattice.momentum(i), &algebra));
            }
        }
        ModeSpinors { lattice, species, algebra, entries }
    }

    pub fn lattice(&self) -> &ModeLattice {
        &self.lattice
    }

    pub fn species(&self) -> &SpeciesTable {
        &self.species
    }

    pub fn algebra(&self) -> &DiracAlgebra {
        &self.algebra
    }

    pub fn get(&self, species: usize, momentum: usize) -> &ModeSpinor {
        &self.entries[species * self.lattice.len() + momentum]
    }

    pub fn energy(&self, species: usize, momentum: usize) -> f64 {
        self.get(species, momentum).energy
    }
}
