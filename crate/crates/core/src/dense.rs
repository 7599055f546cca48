//! Dense complex matrix helpers shared by the small-matrix kernels and the solver.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Float helpers that work with and without `std`.
pub(crate) mod math {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        num_traits::Float::sqrt(x)
    }
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        num_traits::Float::hypot(x, y)
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Converts a real matrix given row by row.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

/// Frobenius norm.
pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt_f()
}

trait SqrtF {
    fn sqrt_f(self) -> f64;
}
impl SqrtF for f64 {
    fn sqrt_f(self) -> f64 {
        math::sqrt(self)
    }
}

/// Maximum absolute column sum.
pub fn norm1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// True when every stored imaginary part is exactly zero.
pub fn is_exactly_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// `(M + M^*) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Horizontal concatenation; all blocks must share the row count.
pub fn hcat(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat row mismatch");
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Solves `X G = Y` for `X` with `G` upper triangular, by forward substitution over
/// columns. Exact zeros in `Y`'s block structure are preserved.
pub fn solve_right_upper(g: &CMat, y: &CMat) -> CMat {
    let k = g.nrows();
    assert_eq!(g.ncols(), k);
    assert_eq!(y.ncols(), k);
    let mut x = y.clone();
    for j in 0..k {
        for l in 0..j {
            let glj = g[(l, j)];
            if glj != ZERO {
                for i in 0..x.nrows() {
                    let v = x[(i, l)] * glj;
                    x[(i, j)] -= v;
                }
            }
        }
        let d = g[(j, j)];
        for i in 0..x.nrows() {
            x[(i, j)] /= d;
        }
    }
    x
}

/// Solves `G X = Y` with `G` upper triangular.
pub fn solve_left_upper(g: &CMat, y: &CMat) -> CMat {
    let k = g.nrows();
    let mut x = y.clone();
    for col in 0..x.ncols() {
        for i in (0..k).rev() {
            let mut s = x[(i, col)];
            for l in i + 1..k {
                s -= g[(i, l)] * x[(l, col)];
            }
            x[(i, col)] = s / g[(i, i)];
        }
    }
    x
}

/// LU factorization with partial pivoting (row interchanges), used for the dense
/// fallback of shifted solves and small capacitance systems.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: CMat,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Returns the index of the first zero pivot on failure.
    pub fn new(mut a: CMat) -> core::result::Result<Self, usize> {
        let n = a.nrows();
        assert_eq!(a.ncols(), n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(k);
            }
            if piv != k {
                a.swap_rows(k, piv);
                perm.swap(k, piv);
            }
            let d = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / d;
                a[(i, k)] = l;
                if l != ZERO {
                    for j in k + 1..n {
                        let u = a[(k, j)];
                        a[(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Smallest pivot modulus relative to the largest; a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        let d: Vec<f64> = (0..n).map(|i| self.lu[(i, i)].norm()).collect();
        let max = d.iter().cloned().fold(0.0, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        min / max
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.dim();
        assert_eq!(b.nrows(), n);
        let mut x = CMat::from_fn(n, b.ncols(), |i, j| b[(self.perm[i], j)]);
        for col in 0..x.ncols() {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.lu[(i, i)];
            }
        }
        x
    }
}

/// Dense solve `A X = B`.
pub fn lu_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let lu = DenseLu::new(a.clone()).map_err(|pivot| Error::Singular { pivot })?;
    Ok(lu.solve(b))
}

/// Orthonormal basis of the column span via Gram-Schmidt with one
/// reorthogonalization pass. Columns that vanish are dropped.
pub fn orthonormal_basis(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(m.ncols());
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let orig = v.norm();
        for _ in 0..2 {
            for u in &cols {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let nv = v.norm();
        if nv > 1e-12 * orig.max(1e-300) && nv > 1e-14 * scale {
            v /= c(nv, 0.0);
            cols.push(v);
        }
    }
    let mut q = zeros(n, cols.len());
    for (j, u) in cols.iter().enumerate() {
        q.set_column(j, u);
    }
    q
}

/// Thin QR by Gram-Schmidt with one reorthogonalization pass: `M = Q T`, `T` upper
/// triangular with positive diagonal. Real input gives exactly real factors. `None`
/// if a column is numerically dependent on the previous ones.
pub fn gram_schmidt_qr(m: &CMat) -> Option<(CMat, CMat)> {
    let (n, k) = m.shape();
    let mut q = zeros(n, k);
    let mut t = zeros(k, k);
    for j in 0..k {
        let mut v = m.column(j).into_owned();
        let orig = v.norm();
        for _ in 0..2 {
            for l in 0..j {
                let proj = q.column(l).dotc(&v);
                t[(l, j)] += proj;
                v -= q.column(l) * proj;
            }
        }
        let nv = v.norm();
        if !(nv > 1e-13 * orig) {
            return None;
        }
        t[(j, j)] = c(nv, 0.0);
        q.set_column(j, &(v / c(nv, 0.0)));
    }
    Some((q, t))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = crate::schur::eigenvalues(&h)?.iter().map(|z| z.re).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Ok(ev)
}

/// Spectral norm computed from the smaller Gram matrix.
pub fn spectral_norm(m: &CMat) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = if m.ncols() <= m.nrows() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    let ev = hermitian_eigenvalues(&gram)?;
    Ok(math::sqrt(ev.last().copied().unwrap_or(0.0).max(0.0)))
}

/// Singular values of a Hermitian matrix (absolute eigenvalues), descending.
pub fn hermitian_singular_values(m: &CMat) -> Result<Vec<f64>> {
    let mut s: Vec<f64> = hermitian_eigenvalues(m)?.into_iter().map(f64::abs).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    Ok(s)
}

/// Growable column-major `n x q` store; columns are appended without copying
/// existing data more than amortized.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStore {
    rows: usize,
    data: Vec<C64>,
}

impl ColumnStore {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            data: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        if self.rows == 0 {
            0
        } else {
            self.data.len() / self.rows
        }
    }

    pub fn push_columns(&mut self, block: &CMat) {
        assert_eq!(block.nrows(), self.rows);
        self.data.extend(block.iter().copied());
    }

    pub fn view(&self) -> DMatrixView<'_, C64> {
        DMatrixView::from_slice(&self.data, self.rows, self.ncols())
    }

    /// View of the trailing `k` columns.
    pub fn tail(&self, k: usize) -> DMatrixView<'_, C64> {
        let q = self.ncols();
        let k = k.min(q);
        let start = (q - k) * self.rows;
        DMatrixView::from_slice(&self.data[start..], self.rows, k)
    }

    pub fn to_matrix(&self) -> CMat {
        self.view().into_owned()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_division_preserves_block_zeros() {
        let g = from_real_rows(3, 3, &[2.0, 1.0, -1.0, 0.0, 3.0, 0.5, 0.0, 0.0, 1.5]);
        let y = from_real_rows(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 0.0, 0.0, 6.0]);
        let x = solve_right_upper(&g, &y);
        assert!(frobenius(&(&x * &g - &y)) < 1e-14);
        assert_eq!(x[(1, 0)], ZERO);
        assert_eq!(x[(2, 0)], ZERO);
        assert_eq!(x[(2, 1)], ZERO);
        let z = solve_left_upper(&g, &y);
        assert!(frobenius(&(&g * &z - &y)) < 1e-14);
    }

    #[test]
    fn dense_lu_solves_and_detects_singularity() {
        let a = CMat::from_fn(4, 4, |i, j| c((i * 3 + j * 7 % 5) as f64, (i as f64) - (j as f64)))
            + identity(4) * c(10.0, 0.0);
        let b = CMat::from_fn(4, 2, |i, j| c(i as f64, j as f64));
        let x = DenseLu::new(a.clone()).unwrap().solve(&b);
        assert!(frobenius(&(&a * &x - &b)) < 1e-12);
        let s = from_real_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(DenseLu::new(s).unwrap_err(), 1);
    }

    #[test]
    fn orthonormal_basis_spans_input() {
        let m = CMat::from_fn(6, 3, |i, j| c((i + 1) as f64 * (j + 1) as f64, (i * j) as f64 * 0.3));
        let q = orthonormal_basis(&m);
        assert_eq!(q.ncols(), 2);
        let qq = q.adjoint() * &q;
        assert!(frobenius(&(qq - identity(2))) < 1e-14);
        let resid = &m - &q * (q.adjoint() * &m);
        assert!(frobenius(&resid) < 1e-12 * frobenius(&m));
    }

    #[test]
    fn column_store_tail_view() {
        let mut s = ColumnStore::new(2);
        s.push_columns(&from_real_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        s.push_columns(&from_real_rows(2, 1, &[5.0, 6.0]));
        assert_eq!(s.ncols(), 3);
        let t = s.tail(2).into_owned();
        assert_eq!(t, from_real_rows(2, 2, &[2.0, 5.0, 4.0, 6.0]));
    }
}
