//! Fixed-fermion-number occupation bases, the truncated boson factor and
//! ladder operators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::basis::{ModeBasis, MAX_MODES};
use crate::fock::sparse::OperatorMatrix;
use crate::{CMat, C64};

/// Upper bound on `D_F * N_b`.
pub const MAX_SECTOR_STATES: usize = 5_000_000;

fn low_bits(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// Number of occupied modes below `i`.
#[inline]
pub fn occupied_below(mask: u128, i: usize) -> u32 {
    (mask & low_bits(i)).count_ones()
}

/// Fermionic sign `(-1)^{occupied_below}` picked up by `a_i` or `a_i^dagger`.
#[inline]
pub fn jw_sign(mask: u128, i: usize) -> f64 {
    if occupied_below(mask, i) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        let num = (n - i) as u128;
        match acc.checked_mul(num) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Occupation basis with exactly `n` of `total` modes filled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockSector {
    total: usize,
    n: usize,
    masks: Vec<u128>,
}

impl FockSector {
    /// Enumerates all masks in increasing order. `boson_dim` only enters the
    /// size guard.
    pub fn new(total: usize, n: usize, boson_dim: usize) -> Result<Self> {
        if total > MAX_MODES {
            return Err(invalid(format!("{total} modes exceed the limit of {MAX_MODES}")));
        }
        if n > total {
            return Err(invalid(format!("fermion number {n} exceeds the {total} available modes")));
        }
        let count = binomial(total, n);
        let requested = count.saturating_mul(boson_dim.max(1) as u128);
        if requested > MAX_SECTOR_STATES as u128 {
            return Err(Error::SectorTooLarge { requested, limit: MAX_SECTOR_STATES });
        }
        let mut masks = Vec::with_capacity(count as usize);
        if n == 0 {
            masks.push(0);
        } else {
            let last = low_bits(n) << (total - n);
            let mut v = low_bits(n);
            loop {
                masks.push(v);
                if v == last {
                    break;
                }
                // Gosper's hack: next integer with the same popcount.
                let t = v | (v - 1);
                v = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
            }
        }
        debug_assert_eq!(masks.len() as u128, count);
        Ok(FockSector { total, n, masks })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn fermion_number(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    pub fn mask(&self, k: usize) -> u128 {
        self.masks[k]
    }

    pub fn masks(&self) -> &[u128] {
        &self.masks
    }

    pub fn index_of(&self, mask: u128) -> Option<usize> {
        self.masks.binary_search(&mask).ok()
    }
}

/// Enumerates the sector of `n` fermions over the modes of `basis`.
pub fn enumerate_sector(basis: &ModeBasis, n: usize) -> Result<FockSector> {
    FockSector::new(basis.len(), n, 1)
}

/// Truncated single oscillator, `N_b = 1` meaning no boson.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BosonSpace {
    dim: usize,
}

impl BosonSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("boson truncation must be at least 1"));
        }
        Ok(BosonSpace { dim })
    }

    pub fn none() -> Self {
        BosonSpace { dim: 1 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Annihilation operator `b` on the truncated space.
    pub fn lowering(&self) -> CMat {
        let mut b = CMat::zeros(self.dim, self.dim);
        for k in 1..self.dim {
            b[(k - 1, k)] = C64::from((k as f64).sqrt());
        }
        b
    }

    /// Coupling operator `(b + b^dagger) / sqrt 2`.
    pub fn coupling(&self) -> CMat {
        let b = self.lowering();
        (&b + b.adjoint()) * C64::from(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Number operator `b^dagger b`.
    pub fn number(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_fn(self.dim, |k, _| C64::from(k as f64)))
    }
}

/// Fermion sector tensored with the boson factor; state index
/// `fermion_index * N_b + xi`.
#[derive(Clone, Debug)]
pub struct HilbertSpace {
    pub basis: ModeBasis,
    pub sector: FockSector,
    pub boson: BosonSpace,
}

impl HilbertSpace {
    pub fn new(basis: ModeBasis, n: usize, boson: BosonSpace) -> Result<Self> {
        let sector = FockSector::new(basis.len(), n, boson.dim())?;
        Ok(HilbertSpace { basis, sector, boson })
    }

    pub fn dim(&self) -> usize {
        self.sector.dim() * self.boson.dim()
    }

    pub fn fermion_number(&self) -> usize {
        self.sector.fermion_number()
    }
}

/// Matrix of `a_i^dagger` from sector `from` (n fermions) to `to` (n + 1).
pub fn creation_matrix(i: usize, from: &FockSector, to: &FockSector) -> Result<OperatorMatrix> {
    if from.total() != to.total() || to.fermion_number() != from.fermion_number() + 1 {
        return Err(invalid("creation operator needs sectors n and n+1 over the same modes"));
    }
    if i >= from.total() {
        return Err(invalid(format!("mode {i} out of range")));
    }
    let mut trip = Vec::new();
    for (c, &m) in from.masks().iter().enumerate() {
        if m & (1u128 << i) == 0 {
            let r = to.index_of(m | (1u128 << i)).expect("target mask in sector");
            trip.push((r, c, C64::from(jw_sign(m, i))));
        }
    }
    OperatorMatrix::from_triplets(to.dim(), from.dim(), &trip)
}

/// Matrix of `a_i` from sector `from` (n fermions) to `to` (n - 1).
pub fn annihilation_matrix(i: usize, from: &FockSector, to: &FockSector) -> Result<OperatorMatrix> {
    Ok(creation_matrix(i, to, from)?.adjoint())
}

/// Creation operator on the full Fock space of `total <= 12` modes, with the
/// bitmask itself as basis index.
pub fn full_fock_creation(i: usize, total: usize) -> Result<OperatorMatrix> {
    if total > 12 {
        return Err(invalid("full Fock space limited to 12 modes"));
    }
    if i >= total {
        return Err(invalid(format!("mode {i} out of range")));
    }
    let dim = 1usize << total;
    let trip: Vec<_> = (0..dim)
        .filter(|m| m & (1 << i) == 0)
        .map(|m| (m | (1 << i), m, C64::from(jw_sign(m as u128, i))))
        .collect();
    OperatorMatrix::from_triplets(dim, dim, &trip)
}

/// Applies `sum_k coeff_k a_k` (`create = false`) or `sum_k coeff_k a_k^dagger`
/// to a vector on `from (x) boson`, giving a vector on `to (x) boson`.
pub fn apply_ladder_combination(
    coeffs: &[C64],
    create: bool,
    from: &FockSector,
    to: &FockSector,
    boson_dim: usize,
    psi: &[C64],
) -> Result<Vec<C64>> {
    let step = if create { 1 } else { -1 };
    if to.fermion_number() as i64 != from.fermion_number() as i64 + step || from.total() != to.total() {
        return Err(invalid("ladder combination between incompatible sectors"));
    }
    if psi.len() != from.dim() * boson_dim {
        return Err(Error::DimensionMismatch { expected: from.dim() * boson_dim, found: psi.len() });
    }
    let mut out = vec![C64::from(0.0); to.dim() * boson_dim];
    for (c, &m) in from.masks().iter().enumerate() {
        let amp = &psi[c * boson_dim..(c + 1) * boson_dim];
        if amp.iter().all(|z| *z == C64::from(0.0)) {
            continue;
        }
        for (k, &w) in coeffs.iter().enumerate() {
            if w == C64::from(0.0) {
                continue;
            }
            let bit = 1u128 << k;
            let occupied = m & bit != 0;
            if occupied == create {
                continue;
            }
            let r = to.index_of(m ^ bit).expect("target mask in sector");
            let f = w * jw_sign(m, k);
            for (xi, a) in amp.iter().enumerate() {
                out[r * boson_dim + xi] += f * a;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exec;

    #[test]
    fn sector_sizes() {
        assert_eq!(FockSector::new(4, 2, 1).unwrap().dim(), 6);
        let s0 = FockSector::new(10, 0, 1).unwrap();
        assert_eq!(s0.masks(), &[0]);
        assert_eq!(FockSector::new(6, 3, 1).unwrap().dim(), 20);
        assert!(FockSector::new(4, 5, 1).is_err());
        assert!(matches!(FockSector::new(128, 64, 1), Err(Error::SectorTooLarge { .. })));
        assert!(matches!(FockSector::new(20, 10, 100), Err(Error::SectorTooLarge { .. })));
        assert_eq!(FockSector::new(128, 128, 1).unwrap().masks(), &[u128::MAX]);
        assert_eq!(FockSector::new(128, 1, 1).unwrap().dim(), 128);
        assert_eq!(binomial(22, 12), 646_646);
    }

    #[test]
    fn sector_matches_brute_force() {
        for total in 0..=10usize {
            for n in 0..=total {
                let s = FockSector::new(total, n, 1).unwrap();
                let brute: Vec<u128> = (0u128..(1 << total)).filter(|m| m.count_ones() as usize == n).collect();
                assert_eq!(s.masks(), &brute[..]);
            }
        }
    }

    #[test]
    fn single_mode_and_antisymmetry() {
        let a = full_fock_creation(0, 1).unwrap().to_dense();
        assert_eq!(a[(1, 0)], C64::from(1.0));
        assert_eq!(a[(0, 1)], C64::from(0.0));
        assert_eq!(a[(1, 1)], C64::from(0.0));
        let a1 = full_fock_creation(0, 2).unwrap();
        let a2 = full_fock_creation(1, 2).unwrap();
        let vac = vec![C64::from(1.0), C64::from(0.0), C64::from(0.0), C64::from(0.0)];
        let x = a1.apply(&a2.apply(&vac, Exec::Sequential).unwrap(), Exec::Sequential).unwrap();
        let y = a2.apply(&a1.apply(&vac, Exec::Sequential).unwrap(), Exec::Sequential).unwrap();
        assert_eq!(x[3], -y[3]);
        assert_eq!(x[3].norm(), 1.0);
    }

    #[test]
    fn sector_ladders_agree_with_full_space() {
        let total = 6;
        let s2 = FockSector::new(total, 2, 1).unwrap();
        let s3 = FockSector::new(total, 3, 1).unwrap();
        for i in 0..total {
            let c = creation_matrix(i, &s2, &s3).unwrap();
            let full = full_fock_creation(i, total).unwrap();
            for (col, &m) in s2.masks().iter().enumerate() {
                for (row, &m2) in s3.masks().iter().enumerate() {
                    assert_eq!(c.get(row, col), full.get(m2 as usize, m as usize));
                }
            }
        }
    }

    #[test]
    fn boson_operators() {
        let b = BosonSpace::new(4).unwrap();
        let x = b.coupling();
        assert!((&x - x.adjoint()).norm() < 1e-15);
        assert!((x[(0, 1)] - C64::from(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        assert_eq!(BosonSpace::none().coupling()[(0, 0)], C64::from(0.0));
        assert!(BosonSpace::new(0).is_err());
    }
}
