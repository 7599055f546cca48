//! Complex Schur decomposition `A = Q T Q^*` by Householder reduction to Hessenberg
//! form followed by single-shift QR sweeps, plus reordering and eigenvectors of the
//! triangular factor.

use alloc::vec::Vec;

use crate::dense::{c, frobenius, math, zeros, CMat, C64, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub q: CMat,
    pub t: CMat,
}

/// Plane rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
fn rotation(f: C64, g: C64) -> (f64, C64, C64) {
    if g == ZERO {
        return (1.0, ZERO, f);
    }
    if f == ZERO {
        let ga = g.norm();
        return (0.0, g.conj() / ga, c(ga, 0.0));
    }
    let fa = f.norm();
    let ga = g.norm();
    let d = math::hypot(fa, ga);
    let phase = f / fa;
    (fa / d, phase * g.conj() / d, phase * d)
}

/// Applies the rotation from the left to rows `i`, `i + 1` for columns in `cols`.
#[inline]
fn rot_rows(m: &mut CMat, i: usize, cs: f64, sn: C64, cols: core::ops::Range<usize>) {
    for j in cols {
        let x = m[(i, j)];
        let y = m[(i + 1, j)];
        m[(i, j)] = x * cs + sn * y;
        m[(i + 1, j)] = y * cs - sn.conj() * x;
    }
}

/// Applies the adjoint rotation from the right to columns `j`, `j + 1` for rows in `rows`.
#[inline]
fn rot_cols(m: &mut CMat, j: usize, cs: f64, sn: C64, rows: core::ops::Range<usize>) {
    for i in rows {
        let x = m[(i, j)];
        let y = m[(i, j + 1)];
        m[(i, j)] = x * cs + sn.conj() * y;
        m[(i, j + 1)] = y * cs - sn * x;
    }
}

fn hessenberg(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = CMat::identity(n, n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let m = n - k - 1;
        let mut v: Vec<C64> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let xnorm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v^*) H on rows k+1..n
        for j in 0..n {
            let mut s = ZERO;
            for i in 0..m {
                s += v[i].conj() * h[(k + 1 + i, j)];
            }
            s *= 2.0;
            for i in 0..m {
                h[(k + 1 + i, j)] -= v[i] * s;
            }
        }
        // H <- H (I - 2 v v^*) and Q <- Q (I - 2 v v^*) on columns k+1..n
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let mut s = ZERO;
                for l in 0..m {
                    s += mat[(i, k + 1 + l)] * v[l];
                }
                s *= 2.0;
                for l in 0..m {
                    mat[(i, k + 1 + l)] -= s * v[l].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

fn wilkinson_shift(a: C64, b: C64, cc: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * cc).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Computes the complex Schur form of a square matrix.
pub fn schur(a: &CMat) -> Result<ComplexSchur> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "schur",
            expected: (n, n),
            found: (a.nrows(), a.ncols()),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SchurNoConvergence);
    }
    let (mut h, mut q) = hessenberg(a);
    if n <= 1 {
        return Ok(ComplexSchur { q, t: h });
    }
    let eps = f64::EPSILON;
    let anorm = frobenius(&h).max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(4);
    while hi > 0 {
        // locate the start of the active unreduced block
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut diag = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if diag == 0.0 {
                diag = anorm;
            }
            if sub <= eps * diag || sub <= f64::MIN_POSITIVE * 1e3 {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > max_total {
            return Err(Error::SchurNoConvergence);
        }
        let shift = if its % 10 == 0 {
            // exceptional shift
            h[(hi, hi)] + c(0.75 * h[(hi, hi - 1)].re.abs(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        let mut x = h[(l, l)] - shift;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            if k > l {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (cs, sn, r) = rotation(x, y);
            let start = if k > l {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = ZERO;
                k
            } else {
                l
            };
            rot_rows(&mut h, k, cs, sn, start..n);
            let last = (k + 2).min(hi);
            rot_cols(&mut h, k, cs, sn, 0..last + 1);
            rot_cols(&mut q, k, cs, sn, 0..n);
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(ComplexSchur { q, t: h })
}

/// Eigenvalues of a general square matrix (diagonal of its Schur form).
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let s = schur(a)?;
    Ok((0..a.nrows()).map(|i| s.t[(i, i)]).collect())
}

impl ComplexSchur {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swaps the adjacent diagonal entries `k` and `k + 1`.
    fn swap(&mut self, k: usize) {
        let n = self.dim();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (cs, sn, _) = rotation(self.t[(k, k + 1)], t22 - t11);
        if k + 2 < n {
            rot_rows(&mut self.t, k, cs, sn, k + 2..n);
        }
        rot_cols(&mut self.t, k, cs, sn, 0..k);
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        self.t[(k + 1, k)] = ZERO;
        rot_cols(&mut self.q, k, cs, sn, 0..n);
    }

    /// Moves every eigenvalue satisfying `select` to the leading block, keeping
    /// relative order. Returns the number of selected eigenvalues.
    pub fn reorder<F: Fn(C64) -> bool>(&mut self, select: F) -> usize {
        let n = self.dim();
        let mut ks = 0;
        for i in 0..n {
            if select(self.t[(i, i)]) {
                let mut k = i;
                while k > ks {
                    self.swap(k - 1);
                    k -= 1;
                }
                ks += 1;
            }
        }
        ks
    }

    /// Unit-norm eigenvectors of the original matrix, one per column, in the order
    /// of the diagonal of `T`.
    pub fn eigenvectors(&self) -> CMat {
        let n = self.dim();
        let tnorm = frobenius(&self.t).max(f64::MIN_POSITIVE);
        let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e3);
        let mut y = zeros(n, n);
        for k in 0..n {
            let lambda = self.t[(k, k)];
            y[(k, k)] = ONE;
            for i in (0..k).rev() {
                let mut s = ZERO;
                for j in i + 1..=k {
                    s += self.t[(i, j)] * y[(j, k)];
                }
                let mut d = self.t[(i, i)] - lambda;
                if d.norm() < smin {
                    d = c(smin, 0.0);
                }
                y[(i, k)] = -s / d;
            }
        }
        let mut v = &self.q * y;
        for mut col in v.column_iter_mut() {
            let nrm = col.norm();
            if nrm > 0.0 {
                col /= c(nrm, 0.0);
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::identity;

    fn test_matrix(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn schur_reconstructs_and_is_triangular() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let a = test_matrix(n, seed);
            let s = schur(&a).unwrap();
            let back = &s.q * &s.t * s.q.adjoint();
            assert!(frobenius(&(back - &a)) < 1e-12 * frobenius(&a).max(1.0));
            assert!(frobenius(&(s.q.adjoint() * &s.q - identity(n))) < 1e-12);
            for j in 0..n {
                for i in j + 1..n {
                    assert_eq!(s.t[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn real_matrix_with_complex_pair() {
        // rotation generator has eigenvalues +-i
        let a = crate::dense::from_real_rows(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn reorder_moves_selected_block_first() {
        let a = test_matrix(12, 9);
        let mut s = schur(&a).unwrap();
        let before = s.eigenvalues();
        let k = s.reorder(|z| z.re < 0.0);
        let after = s.eigenvalues();
        assert_eq!(k, before.iter().filter(|z| z.re < 0.0).count());
        assert!(after[..k].iter().all(|z| z.re < 0.0));
        assert!(after[k..].iter().all(|z| z.re >= 0.0));
        let back = &s.q * &s.t * s.q.adjoint();
        assert!(frobenius(&(back - &a)) < 1e-12 * frobenius(&a));
        // invariant subspace check: A Q1 = Q1 T11
        let q1 = s.q.columns(0, k).into_owned();
        let t11 = s.t.view((0, 0), (k, k)).into_owned();
        assert!(frobenius(&(&a * &q1 - &q1 * t11)) < 1e-12 * frobenius(&a));
    }

    #[test]
    fn eigenvectors_satisfy_eigen_equation() {
        let a = test_matrix(10, 21);
        let s = schur(&a).unwrap();
        let v = s.eigenvectors();
        for (k, lambda) in s.eigenvalues().into_iter().enumerate() {
            let x = v.column(k).into_owned();
            let r = &a * &x - &x * lambda;
            assert!(r.norm() < 1e-11, "residual {}", r.norm());
        }
    }
}
