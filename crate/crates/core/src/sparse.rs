//! Compressed sparse column storage.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{zeros, CMat, C64, ZERO};
use crate::error::{Error, Result};

/// Sparse matrix in compressed sparse column form. Row indices within a column are
/// sorted and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<C64>,
}

impl CscMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut counts = vec![0usize; ncols + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch {
                    what: "sparse triplet index",
                    expected: (nrows, ncols),
                    found: (i + 1, j + 1),
                });
            }
            counts[j + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![ZERO; triplets.len()];
        for &(i, j, v) in triplets {
            rows[next[j]] = i;
            vals[next[j]] = v;
            next[j] += 1;
        }
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowind = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        colptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for j in 0..ncols {
            order.clear();
            order.extend(counts[j]..counts[j + 1]);
            order.sort_by_key(|&k| rows[k]);
            for &k in &order {
                if rowind.len() > colptr[j] && *rowind.last().unwrap() == rows[k] {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    rowind.push(rows[k]);
                    values.push(vals[k]);
                }
            }
            colptr.push(rowind.len());
        }
        Ok(Self {
            nrows,
            ncols,
            colptr,
            rowind,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowind: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Keeps every nonzero of a dense matrix.
    pub fn from_dense(m: &CMat) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != ZERO {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowind(&self) -> &[usize] {
        &self.rowind
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Entries of column `j` as `(row, value)`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.colptr[j]..self.colptr[j + 1];
        self.rowind[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Triplets in column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.colptr[j]..self.colptr[j + 1];
        match self.rowind[r.clone()].binary_search(&i) {
            Ok(k) => self.values[r.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("indices in range")
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                what: "sparse sum",
                expected: (self.nrows, self.ncols),
                found: (other.nrows, other.ncols),
            });
        }
        let mut t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// `self * x` for a dense `x`.
    pub fn mul_dense(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.ncols, "sparse product dimension");
        let mut y = zeros(self.nrows, x.ncols());
        for k in 0..x.ncols() {
            for j in 0..self.ncols {
                let xj = x[(j, k)];
                if xj == ZERO {
                    continue;
                }
                for (i, v) in self.column(j) {
                    y[(i, k)] += v * xj;
                }
            }
        }
        y
    }

    /// `self^* * x` without forming the adjoint.
    pub fn adjoint_mul_dense(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.nrows, "sparse adjoint product dimension");
        let mut y = zeros(self.ncols, x.ncols());
        for k in 0..x.ncols() {
            for j in 0..self.ncols {
                let mut s = ZERO;
                for (i, v) in self.column(j) {
                    s += v.conj() * x[(i, k)];
                }
                y[(j, k)] = s;
            }
        }
        y
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.column(j).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c, from_real_rows};

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CscMatrix::from_triplets(
            2,
            2,
            &[(1, 0, c(1.0, 0.0)), (0, 0, c(2.0, 0.0)), (1, 0, c(3.0, 1.0)), (0, 1, c(5.0, 0.0))],
        )
        .unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 0), c(4.0, 1.0));
        assert_eq!(m.to_dense(), CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(5.0, 0.0), c(4.0, 1.0), ZERO]));
        assert!(CscMatrix::from_triplets(2, 2, &[(2, 0, ZERO)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let d = CMat::from_row_slice(3, 2, &[c(1.0, 1.0), ZERO, c(0.0, 2.0), c(3.0, 0.0), ZERO, c(-1.0, 0.5)]);
        let s = CscMatrix::from_dense(&d);
        let x = from_real_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mul_dense(&x), &d * &x);
        let y = from_real_rows(3, 1, &[1.0, -1.0, 2.0]);
        assert_eq!(s.adjoint_mul_dense(&y), d.adjoint() * &y);
        assert_eq!(s.adjoint().to_dense(), d.adjoint());
        assert!(!s.is_real());
    }
}
