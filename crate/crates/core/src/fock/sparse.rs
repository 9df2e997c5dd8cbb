//! Compressed-sparse-row complex matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMat, Exec, C64};

/// Sparse complex matrix in CSR layout.
///
/// `hermitian` is only ever set after a numerical check (see
/// [`OperatorMatrix::mark_hermitian`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        OperatorMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], cols: vec![], vals: vec![], hermitian: false }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::from(1.0); n])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let n = d.len();
        let mut m = OperatorMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: d.to_vec(),
            hermitian: false,
        };
        m.hermitian = d.iter().all(|z| z.im == 0.0);
        m
    }

    /// Builds a matrix from per-row entry lists. Entries within a row may be
    /// unsorted and repeated; repeats are summed, exact zeros are dropped.
    pub fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, C64)>>) -> Result<Self> {
        if rows.len() != nrows {
            return Err(Error::DimensionMismatch { expected: nrows, found: rows.len() });
        }
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                if c >= ncols {
                    return Err(Error::DimensionMismatch { expected: ncols, found: c + 1 });
                }
                let mut v = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != C64::from(0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(OperatorMatrix { nrows, ncols, row_ptr, cols, vals, hermitian: false })
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows {
                return Err(Error::DimensionMismatch { expected: nrows, found: r + 1 });
            }
            rows[r].push((c, v));
        }
        Self::from_rows(nrows, ncols, rows)
    }

    pub fn from_dense(m: &CMat) -> Self {
        let rows = (0..m.nrows())
            .map(|r| (0..m.ncols()).filter(|&c| m[(r, c)] != C64::from(0.0)).map(|c| (c, m[(r, c)])).collect())
            .collect();
        Self::from_rows(m.nrows(), m.ncols(), rows).expect("dense shape is consistent")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[a..b].binary_search(&c) {
            Ok(k) => self.vals[a + k],
            Err(_) => C64::from(0.0),
        }
    }

    /// Largest entrywise deviation `|A - A^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut err: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                err = err.max((v - self.get(c, r).conj()).norm());
            }
        }
        err
    }

    /// Sets the Hermitian flag after checking it to `tol`.
    pub fn mark_hermitian(&mut self, tol: f64) -> Result<()> {
        let err = self.hermiticity_error();
        if err > tol {
            return Err(crate::error::invalid(format!("operator is not Hermitian (deviation {err:e})")));
        }
        self.hermitian = true;
        Ok(())
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                rows[c].push((r, v.conj()));
            }
        }
        let mut m = Self::from_rows(self.ncols, self.nrows, rows).expect("shape");
        m.hermitian = self.hermitian;
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.clone();
        for v in m.vals.iter_mut() {
            *v *= s;
        }
        m.hermitian = self.hermitian && s.im == 0.0;
        m
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Result<Self> {
        self.check_same_shape(other)?;
        let rows = (0..self.nrows)
            .map(|r| self.row(r).chain(other.row(r).map(|(c, v)| (c, v * s))).collect())
            .collect();
        let mut m = Self::from_rows(self.nrows, self.ncols, rows)?;
        m.hermitian = self.hermitian && other.hermitian && s.im == 0.0;
        Ok(m)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, C64::from(1.0))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self, exec: Exec) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: other.nrows });
        }
        let rows = exec.map_range(self.nrows, |r| {
            let mut acc: Vec<(usize, C64)> = Vec::new();
            for (k, a) in self.row(r) {
                acc.extend(other.row(k).map(|(c, b)| (c, a * b)));
            }
            acc
        });
        Self::from_rows(self.nrows, other.ncols, rows)
    }

    /// Kronecker product `self (x) b` with a small dense right factor.
    pub fn kron_dense(&self, b: &CMat) -> Self {
        let (bn, bm) = (b.nrows(), b.ncols());
        let mut rows = Vec::with_capacity(self.nrows * bn);
        for r in 0..self.nrows {
            for br in 0..bn {
                let mut row = Vec::new();
                for (c, v) in self.row(r) {
                    for bc in 0..bm {
                        let w = b[(br, bc)];
                        if w != C64::from(0.0) {
                            row.push((c * bm + bc, v * w));
                        }
                    }
                }
                rows.push(row);
            }
        }
        Self::from_rows(self.nrows * bn, self.ncols * bm, rows).expect("shape")
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], exec: Exec) -> Result<Vec<C64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: x.len() });
        }
        Ok(exec.map_range(self.nrows, |r| self.row(r).map(|(c, v)| v * x[c]).sum()))
    }

    /// Writes `A x` into `y`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64], exec: Exec) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: x.len() });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, found: y.len() });
        }
        exec.for_each_mut(y, |r, out| *out = self.row(r).map(|(c, v)| v * x[c]).sum());
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `sum_c |A_rc|`, an upper bound on the spectral norm of a
    /// Hermitian matrix.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Raw CSR arrays `(row_ptr, cols, vals)`.
    pub fn raw_parts(&self) -> (&[usize], &[usize], &[C64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.nrows != other.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, found: other.nrows });
        }
        if self.ncols != other.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: other.ncols });
        }
        Ok(())
    }
}

/// Frobenius norm of `AB - BA`.
pub fn commutator_norm(a: &OperatorMatrix, b: &OperatorMatrix, exec: Exec) -> Result<f64> {
    if a.nrows() != a.ncols() || b.nrows() != b.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let ab = a.matmul(b, exec)?;
    let ba = b.matmul(a, exec)?;
    Ok(ab.add_scaled(&ba, C64::from(-1.0))?.frobenius_norm())
}
