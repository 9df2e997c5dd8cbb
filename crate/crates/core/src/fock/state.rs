//! Normalised state vectors and expectation values.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::sector::HilbertSpace;
use crate::fock::sparse::OperatorMatrix;
use crate::{Exec, C64};

/// Tolerance on `| ||psi|| - 1 |`.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
    pub time: f64,
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl QuantumState {
    /// Wraps an amplitude vector that must already be normalised.
    pub fn new(amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state norm {n} differs from 1")));
        }
        Ok(QuantumState { amplitudes, time })
    }

    /// Normalises `amplitudes`; fails on the zero vector.
    pub fn normalized(mut amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("cannot normalise a zero or non-finite vector"));
        }
        for z in amplitudes.iter_mut() {
            *z /= n;
        }
        Ok(QuantumState { amplitudes, time })
    }

    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range {dim}")));
        }
        let mut v = vec![C64::from(0.0); dim];
        v[index] = C64::from(1.0);
        Ok(QuantumState { amplitudes: v, time: 0.0 })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }
}

/// The free vacuum `|0>`: every negative-band mode filled, boson in `xi = 0`.
pub fn dirac_sea_state(space: &HilbertSpace) -> Result<QuantumState> {
    let mask = space.basis.sea_mask();
    let need = mask.count_ones() as usize;
    if space.fermion_number() != need {
        return Err(invalid(format!(
            "the Dirac sea has {need} fermions but the sector holds {}",
            space.fermion_number()
        )));
    }
    let k = space.sector.index_of(mask).expect("sea mask in sector");
    QuantumState::basis_state(space.dim(), k * space.boson.dim())
}

/// One fermion in the superposition `sum_i c_i a_i^dagger |empty>` of
/// single-particle modes, boson in `xi = 0`. `coeffs` is indexed by mode.
pub fn single_particle_state(space: &HilbertSpace, coeffs: &[C64]) -> Result<QuantumState> {
    if space.fermion_number() != 1 {
        return Err(invalid("single-particle states live in the one-fermion sector"));
    }
    if coeffs.len() != space.basis.len() {
        return Err(Error::DimensionMismatch { expected: space.basis.len(), found: coeffs.len() });
    }
    let nb = space.boson.dim();
    let mut v = vec![C64::from(0.0); space.dim()];
    for (i, c) in coeffs.iter().enumerate() {
        let k = space.sector.index_of(1u128 << i).expect("one-fermion mask");
        v[k * nb] = *c;
    }
    QuantumState::normalized(v, 0.0)
}

/// `<psi|A|psi>`.
pub fn expectation(op: &OperatorMatrix, state: &QuantumState, exec: Exec) -> Result<C64> {
    if op.ncols() != state.dim() || op.nrows() != state.dim() {
        return Err(Error::DimensionMismatch { expected: op.ncols(), found: state.dim() });
    }
    let av = op.apply(state.amplitudes(), exec)?;
    Ok(inner(state.amplitudes(), &av))
}

/// `<psi|A^2|psi> - <psi|A|psi>^2` for Hermitian `A`, computed as
/// `||A psi||^2 - <A>^2`.
pub fn variance(op: &OperatorMatrix, state: &QuantumState, exec: Exec) -> Result<f64> {
    if op.ncols() != state.dim() || op.nrows() != state.dim() {
        return Err(Error::DimensionMismatch { expected: op.ncols(), found: state.dim() });
    }
    let av = op.apply(state.amplitudes(), exec)?;
    let mean = inner(state.amplitudes(), &av).re;
    Ok(norm(&av).powi(2) - mean * mean)
}
