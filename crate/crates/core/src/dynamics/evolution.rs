//! Unitary evolution `psi(t) = e^{-iHt} psi`.

use crate::error::{invalid, Error, Result};
use crate::fock::state::{inner, norm};
use crate::fock::{OperatorMatrix, QuantumState};
use crate::{CMat, Exec, C64};

/// Largest dimension handled by dense diagonalisation.
pub const DENSE_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionMethod {
    /// Dense up to [`DENSE_LIMIT`], Taylor above.
    Auto,
    Dense,
    Taylor,
}

enum Method {
    Dense { values: Vec<f64>, vectors: CMat },
    Taylor { bound: f64 },
}

/// Hamiltonian together with a cached propagation method.
pub struct EvolutionPlan {
    h: OperatorMatrix,
    method: Method,
    exec: Exec,
}

impl EvolutionPlan {
    pub fn new(h: OperatorMatrix, exec: Exec) -> Result<Self> {
        Self::with_method(h, EvolutionMethod::Auto, exec)
    }

    pub fn with_method(h: OperatorMatrix, method: EvolutionMethod, exec: Exec) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
        }
        if !h.is_hermitian() {
            return Err(invalid("evolution needs a Hamiltonian checked to be Hermitian"));
        }
        let dense = match method {
            EvolutionMethod::Auto => h.nrows() <= DENSE_LIMIT,
            EvolutionMethod::Dense => true,
            EvolutionMethod::Taylor => false,
        };
        let method = if dense {
            let eig = h.to_dense().symmetric_eigen();
            Method::Dense { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
        } else {
            Method::Taylor { bound: h.max_row_sum() }
        };
        Ok(EvolutionPlan { h, method, exec })
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.method, Method::Dense { .. })
    }

    /// Eigenvalues, when dense.
    pub fn spectrum(&self) -> Option<&[f64]> {
        match &self.method {
            Method::Dense { values, .. } => Some(values),
            Method::Taylor { .. } => None,
        }
    }

    pub fn energy(&self, psi: &QuantumState) -> Result<f64> {
        Ok(inner(psi.amplitudes(), &self.h.apply(psi.amplitudes(), self.exec)?).re)
    }

    /// Coefficients in the eigenbasis, when dense.
    fn eigen_coefficients(&self, psi: &[C64]) -> Option<Vec<C64>> {
        match &self.method {
            Method::Dense { vectors, .. } => {
                let v = nalgebra::DVector::from_column_slice(psi);
                Some(vectors.ad_mul(&v).iter().copied().collect())
            }
            Method::Taylor { .. } => None,
        }
    }

    fn from_eigen(&self, coeffs: &[C64], t: f64) -> Vec<C64> {
        let Method::Dense { values, vectors } = &self.method else { unreachable!() };
        let rotated = nalgebra::DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(values).map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
        );
        (vectors * rotated).iter().copied().collect()
    }

    fn taylor(&self, psi: &[C64], t: f64, bound: f64) -> Result<Vec<C64>> {
        let steps = ((bound * t.abs()).ceil() as usize).max(1);
        let dt = t / steps as f64;
        let mut v = psi.to_vec();
        let mut term = vec![C64::from(0.0); v.len()];
        let mut next = vec![C64::from(0.0); v.len()];
        for _ in 0..steps {
            term.copy_from_slice(&v);
            let mut acc = v.clone();
            for k in 1..80 {
                self.h.apply_into(&term, &mut next, self.exec)?;
                let f = C64::new(0.0, -dt / k as f64);
                for (t_, n_) in term.iter_mut().zip(&next) {
                    *t_ = n_ * f;
                }
                for (a, t_) in acc.iter_mut().zip(&term) {
                    *a += t_;
                }
                if norm(&term) < 1e-17 * norm(&acc) {
                    break;
                }
            }
            v = acc;
        }
        Ok(v)
    }

    /// `e^{-iHt} psi`; the result carries time `psi.time + t`.
    pub fn evolve(&self, psi: &QuantumState, t: f64) -> Result<QuantumState> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        let amps = match &self.method {
            Method::Dense { .. } => {
                let c = self.eigen_coefficients(psi.amplitudes()).expect("dense");
                self.from_eigen(&c, t)
            }
            Method::Taylor { bound } => self.taylor(psi.amplitudes(), t, *bound)?,
        };
        // Rounding only; renormalise to keep the stored-state invariant.
        QuantumState::normalized(amps, psi.time + t)
    }
}

pub fn evolve_state(plan: &EvolutionPlan, psi: &QuantumState, t: f64) -> Result<QuantumState> {
    plan.evolve(psi, t)
}

/// Anything that yields the state at an absolute time.
pub trait StateSchedule: Sync {
    fn state_at(&self, t: f64) -> Result<QuantumState>;
}

/// `psi(t) = e^{-iH(t - t0)} psi_0` with cached eigen-coefficients.
pub struct Evolution<'a> {
    plan: &'a EvolutionPlan,
    initial: QuantumState,
    coeffs: Option<Vec<C64>>,
}

impl<'a> Evolution<'a> {
    pub fn new(plan: &'a EvolutionPlan, initial: QuantumState) -> Result<Self> {
        if initial.dim() != plan.dim() {
            return Err(Error::DimensionMismatch { expected: plan.dim(), found: initial.dim() });
        }
        let coeffs = plan.eigen_coefficients(initial.amplitudes());
        Ok(Evolution { plan, initial, coeffs })
    }

    pub fn plan(&self) -> &EvolutionPlan {
        self.plan
    }

    pub fn initial(&self) -> &QuantumState {
        &self.initial
    }
}

impl StateSchedule for Evolution<'_> {
    fn state_at(&self, t: f64) -> Result<QuantumState> {
        let dt = t - self.initial.time;
        match &self.coeffs {
            Some(c) => QuantumState::normalized(self.plan.from_eigen(c, dt), t),
            None => {
                let mut s = self.plan.evolve(&self.initial, dt)?;
                s.time = t;
                Ok(s)
            }
        }
    }
}

/// Fixed state, for static tests.
pub struct Frozen(pub QuantumState);

impl StateSchedule for Frozen {
    fn state_at(&self, t: f64) -> Result<QuantumState> {
        let mut s = self.0.clone();
        s.time = t;
        Ok(s)
    }
}

/// `t -> R(psi(end - t))` for an antiunitary map `R` (time reversal).
pub struct Reversed<S, F> {
    pub inner: S,
    pub end: f64,
    pub map: F,
}

impl<S, F> StateSchedule for Reversed<S, F>
where
    S: StateSchedule,
    F: Fn(&[C64]) -> Result<Vec<C64>> + Sync,
{
    fn state_at(&self, t: f64) -> Result<QuantumState> {
        let s = self.inner.state_at(self.end - t)?;
        QuantumState::normalized((self.map)(s.amplitudes())?, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn hermitian(mut h: OperatorMatrix) -> OperatorMatrix {
        h.mark_hermitian(1e-12).unwrap();
        h
    }

    #[test]
    fn diagonal_phase_rotation() {
        let h = OperatorMatrix::diagonal(&[c(1.0, 0.0), c(-0.5, 0.0), c(2.0, 0.0)]);
        let psi = QuantumState::normalized(vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)], 0.0).unwrap();
        for method in [EvolutionMethod::Dense, EvolutionMethod::Taylor] {
            let plan = EvolutionPlan::with_method(h.clone(), method, Exec::Sequential).unwrap();
            let out = plan.evolve(&psi, 1.7).unwrap();
            for (k, e) in [1.0, -0.5, 2.0].iter().enumerate() {
                let expect = psi.amplitudes()[k] * C64::from_polar(1.0, -e * 1.7);
                assert!((out.amplitudes()[k] - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rabi_oscillation() {
        // H = [[0, W], [W, 0]]: P_2(t) = sin^2(W t).
        let w = 0.37;
        let h = hermitian(OperatorMatrix::from_triplets(2, 2, &[(0, 1, c(w, 0.0)), (1, 0, c(w, 0.0))]).unwrap());
        let psi = QuantumState::basis_state(2, 0).unwrap();
        for method in [EvolutionMethod::Dense, EvolutionMethod::Taylor] {
            let plan = EvolutionPlan::with_method(h.clone(), method, Exec::Sequential).unwrap();
            for &t in &[0.3, 2.0, 7.5] {
                let out = plan.evolve(&psi, t).unwrap();
                assert!((out.amplitudes()[1].norm_sqr() - (w * t).sin().powi(2)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dense_and_taylor_agree_and_conserve() {
        let n = 12;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, c((i as f64 * 0.7).sin(), 0.0)));
            let j = (i * 5 + 3) % n;
            if j != i {
                let v = c(0.2 + 0.01 * i as f64, 0.1);
                trip.push((i, j, v));
                trip.push((j, i, v.conj()));
            }
        }
        let h = hermitian(OperatorMatrix::from_triplets(n, n, &trip).unwrap());
        let psi = QuantumState::normalized((0..n).map(|k| c(1.0, k as f64 * 0.1)).collect(), 0.0).unwrap();
        let dense = EvolutionPlan::with_method(h.clone(), EvolutionMethod::Dense, Exec::Sequential).unwrap();
        let taylor = EvolutionPlan::with_method(h, EvolutionMethod::Taylor, Exec::Parallel).unwrap();
        let e0 = dense.energy(&psi).unwrap();
        for &t in &[0.5, 3.0, 10.0] {
            let a = dense.evolve(&psi, t).unwrap();
            let b = taylor.evolve(&psi, t).unwrap();
            assert!((a.norm() - 1.0).abs() < 1e-12);
            assert!(a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-11));
            assert!((dense.energy(&a).unwrap() - e0).abs() < 1e-10);
        }
        let sched = Evolution::new(&dense, psi.clone()).unwrap();
        let s = sched.state_at(3.0).unwrap();
        let d = dense.evolve(&psi, 3.0).unwrap();
        assert!(s.amplitudes().iter().zip(d.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-12));
    }

    #[test]
    fn rejects_unchecked_hamiltonian() {
        let h = OperatorMatrix::from_triplets(2, 2, &[(0, 1, c(1.0, 0.0))]).unwrap();
        assert!(EvolutionPlan::new(h, Exec::Sequential).is_err());
    }
}
