//! Single-particle mode basis and its fixed global order.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::modes::{ModeLattice, ModeSpinors, SpeciesTable};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Positive = 0,
    Negative = 1,
}

/// Label of one single-particle mode. The derived order (species, band,
/// spin, momentum) is the global order used for fermionic signs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SingleParticleIndex {
    pub species: usize,
    pub band: Band,
    pub spin: usize,
    pub momentum: usize,
}

/// Largest number of single-particle modes supported by the bitmask basis.
pub const MAX_MODES: usize = 128;

/// All single-particle modes with their spinors and energies.
///
/// Mode `i` has wavefunction `phi_i(x) = w_i e^{i p_i.x} / sqrt(L^d)` in
/// species `species(i)`, where `w_i` is a unit spinor. Position-space
/// components are flattened as `species * spinor_dim + a`.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    spinors: Arc<ModeSpinors>,
    labels: Vec<SingleParticleIndex>,
}

impl ModeBasis {
    pub fn new(spinors: ModeSpinors) -> Result<Self> {
        let spins = spinors.lattice().dim().spins();
        let m = spinors.lattice().len();
        let total = 2 * spins * m * spinors.species().len();
        if total > MAX_MODES {
            return Err(invalid(format!("{total} single-particle modes exceed the limit of {MAX_MODES}")));
        }
        let mut labels = Vec::with_capacity(total);
        for species in 0..spinors.species().len() {
            for band in [Band::Positive, Band::Negative] {
                for spin in 0..spins {
                    for momentum in 0..m {
                        labels.push(SingleParticleIndex { species, band, spin, momentum });
                    }
                }
            }
        }
        Ok(ModeBasis { spinors: Arc::new(spinors), labels })
    }

    pub fn build(lattice: ModeLattice, species: SpeciesTable) -> Result<Self> {
        Self::new(ModeSpinors::build(lattice, species))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn spinors(&self) -> &ModeSpinors {
        &self.spinors
    }

    pub fn lattice(&self) -> &ModeLattice {
        self.spinors.lattice()
    }

    pub fn species(&self) -> &SpeciesTable {
        self.spinors.species()
    }

    pub fn spinor_dim(&self) -> usize {
        self.lattice().dim().spinor_dim()
    }

    /// Number of position-space components `species * spinor_dim`.
    pub fn components(&self) -> usize {
        self.species().len() * self.spinor_dim()
    }

    pub fn label(&self, i: usize) -> SingleParticleIndex {
        self.labels[i]
    }

    pub fn labels(&self) -> &[SingleParticleIndex] {
        &self.labels
    }

    pub fn index_of(&self, label: SingleParticleIndex) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    /// The unit spinor `w_i`.
    pub fn spinor(&self, i: usize) -> &[C64] {
        let l = self.labels[i];
        let e = self.spinors.get(l.species, l.momentum);
        match l.band {
            Band::Positive => &e.positive[l.spin],
            Band::Negative => &e.negative[l.spin],
        }
    }

    /// Single-particle energy, `+E` or `-E`.
    pub fn energy(&self, i: usize) -> f64 {
        let l = self.labels[i];
        let e = self.spinors.energy(l.species, l.momentum);
        match l.band {
            Band::Positive => e,
            Band::Negative => -e,
        }
    }

    pub fn charge(&self, i: usize) -> f64 {
        self.species().get(self.labels[i].species).charge
    }

    pub fn momentum(&self, i: usize) -> [f64; 3] {
        self.lattice().momentum(self.labels[i].momentum)
    }

    pub fn indices_in_band(&self, band: Band) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].band == band).collect()
    }

    /// Bitmask with all negative-band modes set.
    pub fn sea_mask(&self) -> u128 {
        self.indices_in_band(Band::Negative).iter().fold(0u128, |m, &i| m | (1u128 << i))
    }

    /// Values of every mode function at `x`: entry `[i * components + c]` is
    /// component `c` of `phi_i(x)`.
    pub fn mode_values(&self, x: &[f64]) -> Vec<C64> {
        let nc = self.components();
        let sd = self.spinor_dim();
        let phases = self.lattice().phases(x);
        let norm = 1.0 / self.lattice().volume().sqrt();
        let mut out = vec![C64::from(0.0); self.len() * nc];
        for i in 0..self.len() {
            let l = self.labels[i];
            let ph = phases[l.momentum] * norm;
            for (a, w) in self.spinor(i).iter().enumerate() {
                out[i * nc + l.species * sd + a] = w * ph;
            }
        }
        out
    }

    /// `w_i^dagger w_j` if both modes belong to the same species, else 0.
    pub fn spinor_overlap(&self, i: usize, j: usize) -> C64 {
        if self.labels[i].species != self.labels[j].species {
            return C64::from(0.0);
        }
        self.spinor(i).iter().zip(self.spinor(j)).map(|(a, b)| a.conj() * b).sum()
    }

    /// Integer wave-vector difference `n_j - n_i`.
    pub fn wave_difference(&self, i: usize, j: usize) -> [i64; 3] {
        let a = self.lattice().integer(self.labels[i].momentum);
        let b = self.lattice().integer(self.labels[j].momentum);
        [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
    }

    /// Momentum difference `p_j - p_i`.
    pub fn momentum_difference(&self, i: usize, j: usize) -> [f64; 3] {
        let n = self.wave_difference(i, j);
        let unit = 2.0 * PI / self.lattice().box_len();
        [unit * n[0] as f64, unit * n[1] as f64, unit * n[2] as f64]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{build_mode_lattice, SpaceDim};

    #[test]
    fn ordering_and_counts() {
        let lat = build_mode_lattice(SpaceDim::Three, 2.0 * PI, 1.2).unwrap();
        let b = ModeBasis::build(lat, SpeciesTable::single(1.0)).unwrap();
        assert_eq!(b.len(), 2 * 2 * 7);
        for w in b.labels().windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..b.len() {
            assert_eq!(b.index_of(b.label(i)), Some(i));
        }
        assert_eq!(b.sea_mask().count_ones(), 14);
        let lat = build_mode_lattice(SpaceDim::Three, 2.0 * PI, 3.0).unwrap();
        assert!(ModeBasis::build(lat, SpeciesTable::single(1.0)).is_err());
    }

    #[test]
    fn mode_functions_orthonormal_on_grid() {
        let lat = build_mode_lattice(SpaceDim::One, 3.0, 5.0).unwrap();
        let b = ModeBasis::build(lat, SpeciesTable::single(0.7)).unwrap();
        let nc = b.components();
        let n = 32;
        let h = 3.0 / n as f64;
        let mut gram = vec![C64::from(0.0); b.len() * b.len()];
        for g in 0..n {
            let v = b.mode_values(&[g as f64 * h]);
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let s: C64 = (0..nc).map(|c| v[i * nc + c].conj() * v[j * nc + c]).sum();
                    gram[i * b.len() + j] += s * h;
                }
            }
        }
        for i in 0..b.len() {
            for j in 0..b.len() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * b.len() + j] - C64::from(e)).norm() < 1e-12);
            }
        }
    }
}
