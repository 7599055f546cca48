//! Factor and solve `(A^* - mu E^*) W = RHS`, plus the low-rank corrected variant
//! `(A^* - K B^* - mu E^*) W = RHS` through Sherman-Morrison-Woodbury.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{hcat, identity, CMat, DenseLu, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// Systems with fewer unknowns than this are factored densely.
pub const DEFAULT_DENSE_THRESHOLD: usize = 500;

/// Threshold for partial pivoting in the sparse LU; the diagonal is kept whenever
/// it is at least this fraction of the largest candidate.
const PIVOT_THRESHOLD: f64 = 0.1;

/// Minimum-degree ordering on the pattern of `M + M^T`. Ties go to the smaller index.
pub fn minimum_degree(m: &CscMatrix) -> Vec<usize> {
    let n = m.ncols();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for j in 0..n {
        for (i, _) in m.column(j) {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !eliminated[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .expect("uneliminated node remains");
        eliminated[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = core::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
            for &w in &nbrs {
                if w != u {
                    adj[u].insert(w);
                }
            }
        }
    }
    order
}

/// `P M Q = L U` with unit lower `L` (diagonal stored first in each column) and
/// upper `U` (diagonal stored last).
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<C64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<C64>,
    pinv: Vec<usize>,
    q: Vec<usize>,
}

const UNSET: usize = usize::MAX;

impl SparseLu {
    /// Left-looking factorization; `singular_tol` is the absolute pivot floor.
    pub fn new(m: &CscMatrix, q: Vec<usize>, singular_tol: f64) -> core::result::Result<Self, usize> {
        let n = m.ncols();
        assert_eq!(m.nrows(), n);
        assert_eq!(q.len(), n);
        let mut lp = Vec::with_capacity(n + 1);
        let mut up = Vec::with_capacity(n + 1);
        let mut li: Vec<usize> = Vec::with_capacity(m.nnz() + n);
        let mut lx = Vec::with_capacity(m.nnz() + n);
        let mut ui = Vec::with_capacity(m.nnz() + n);
        let mut ux = Vec::with_capacity(m.nnz() + n);
        let mut pinv = vec![UNSET; n];
        let mut x = vec![ZERO; n];
        let mut marked = vec![false; n];
        let mut reach: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for (k, &col) in q.iter().enumerate() {
            lp.push(li.len());
            up.push(ui.len());

            // Nonzero pattern of L \ M(:, col): depth-first search through the
            // columns of L reached from the pattern of the right-hand side.
            reach.clear();
            for (r, _) in m.column(col) {
                if marked[r] {
                    continue;
                }
                marked[r] = true;
                stack.push((r, 0));
                while let Some(top) = stack.last_mut() {
                    let j = top.0;
                    let jcol = pinv[j];
                    let (start, end) = if jcol == UNSET { (0, 0) } else { (lp[jcol], lp[jcol + 1]) };
                    let mut pushed = None;
                    while start + top.1 < end {
                        let i: usize = li[start + top.1];
                        top.1 += 1;
                        if !marked[i] {
                            pushed = Some(i);
                            break;
                        }
                    }
                    match pushed {
                        Some(i) => {
                            marked[i] = true;
                            stack.push((i, 0));
                        }
                        None => {
                            reach.push(j);
                            stack.pop();
                        }
                    }
                }
            }
            for &j in &reach {
                marked[j] = false;
            }

            // Numeric triangular solve in topological order.
            for (r, v) in m.column(col) {
                x[r] = v;
            }
            for &j in reach.iter().rev() {
                let jcol = pinv[j];
                if jcol == UNSET {
                    continue;
                }
                let xj = x[j];
                if xj == ZERO {
                    continue;
                }
                for p in lp[jcol] + 1..lp[jcol + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut best = -1.0;
            for &i in reach.iter().rev() {
                if pinv[i] == UNSET {
                    let t = x[i].norm();
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == UNSET || !(best > singular_tol) {
                return Err(k);
            }
            if pinv[col] == UNSET && x[col].norm() >= best * PIVOT_THRESHOLD {
                ipiv = col;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(ONE);
            for &i in reach.iter().rev() {
                if pinv[i] == UNSET {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = ZERO;
            }
        }
        lp.push(li.len());
        up.push(ui.len());
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self {
            n,
            lp,
            li,
            lx,
            up,
            ui,
            ux,
            pinv,
            q,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` plus `U`.
    pub fn factor_nnz(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.n;
        assert_eq!(b.nrows(), n);
        let mut out = CMat::zeros(n, b.ncols());
        let mut x = vec![ZERO; n];
        for col in 0..b.ncols() {
            for i in 0..n {
                x[self.pinv[i]] = b[(i, col)];
            }
            for j in 0..n {
                let xj = x[j];
                if xj != ZERO {
                    for p in self.lp[j] + 1..self.lp[j + 1] {
                        x[self.li[p]] -= self.lx[p] * xj;
                    }
                }
            }
            for j in (0..n).rev() {
                let last = self.up[j + 1] - 1;
                x[j] /= self.ux[last];
                let xj = x[j];
                if xj != ZERO {
                    for p in self.up[j]..last {
                        x[self.ui[p]] -= self.ux[p] * xj;
                    }
                }
            }
            for k in 0..n {
                out[(self.q[k], col)] = x[k];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Dense(DenseLu),
    Sparse(SparseLu),
}

/// Factorization of `A^* - mu E^*`, immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct ShiftedFactor {
    shift: C64,
    n: usize,
    complex: bool,
    inner: Factor,
}

impl ShiftedFactor {
    pub fn shift(&self) -> C64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Whether the factored matrix has any entry with nonzero imaginary part.
    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.inner, Factor::Sparse(_))
    }
}

/// Assembles `A^* - mu E^*` as a fresh sparse matrix (`E = I` when absent).
pub fn assemble_shifted(a: &CscMatrix, e: Option<&CscMatrix>, mu: C64) -> Result<CscMatrix> {
    let n = a.nrows();
    let e_adj = match e {
        Some(e) => e.adjoint(),
        None => CscMatrix::identity(n),
    };
    a.adjoint().add_scaled(ONE, &e_adj, -mu)
}

pub fn factorize(a: &CscMatrix, e: Option<&CscMatrix>, mu: C64) -> Result<ShiftedFactor> {
    factorize_with(a, e, mu, DEFAULT_DENSE_THRESHOLD)
}

/// As [`factorize`], with an explicit size below which the dense path is used.
pub fn factorize_with(
    a: &CscMatrix,
    e: Option<&CscMatrix>,
    mu: C64,
    dense_threshold: usize,
) -> Result<ShiftedFactor> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "A",
            expected: (n, n),
            found: (n, a.ncols()),
        });
    }
    if let Some(e) = e {
        if e.nrows() != n || e.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "E",
                expected: (n, n),
                found: (e.nrows(), e.ncols()),
            });
        }
    }
    let m = assemble_shifted(a, e, mu)?;
    let complex = !m.is_real();
    let tol = (n.max(1) as f64) * f64::EPSILON * m.norm1();
    let singular = Error::SingularShiftedMatrix { shift: mu };
    let inner = if n < dense_threshold {
        let lu = DenseLu::new(m.to_dense()).map_err(|_| singular.clone())?;
        if n > 0 && lu.pivot_ratio() <= (n as f64) * f64::EPSILON {
            return Err(singular);
        }
        Factor::Dense(lu)
    } else {
        let q = minimum_degree(&m);
        Factor::Sparse(SparseLu::new(&m, q, tol).map_err(|_| singular)?)
    };
    Ok(ShiftedFactor {
        shift: mu,
        n,
        complex,
        inner,
    })
}

pub fn solve_factored(f: &ShiftedFactor, rhs: &CMat) -> Result<CMat> {
    if rhs.nrows() != f.n {
        return Err(Error::DimensionMismatch {
            what: "shifted solve right-hand side",
            expected: (f.n, rhs.ncols()),
            found: (rhs.nrows(), rhs.ncols()),
        });
    }
    Ok(match &f.inner {
        Factor::Dense(lu) => lu.solve(rhs),
        Factor::Sparse(lu) => lu.solve(rhs),
    })
}

/// Solves `(A^* - K B^* - mu E^*) W = RHS` using one joint solve with `[RHS K]`.
pub fn smw_solve(f: &ShiftedFactor, k: &CMat, b: &CMat, rhs: &CMat) -> Result<CMat> {
    let m = b.ncols();
    if k.nrows() != f.n || b.nrows() != f.n || k.ncols() != m {
        return Err(Error::DimensionMismatch {
            what: "SMW feedback",
            expected: (f.n, m),
            found: (k.nrows(), k.ncols()),
        });
    }
    if m == 0 {
        return solve_factored(f, rhs);
    }
    let p = rhs.ncols();
    let ln = solve_factored(f, &hcat(&[rhs, k]))?;
    let l = ln.columns(0, p);
    let nn = ln.columns(p, m);
    let cap = identity(m) - b.adjoint() * nn;
    let singular = Error::SmwCapacitanceSingular { shift: f.shift };
    let lu = DenseLu::new(cap).map_err(|_| singular.clone())?;
    if lu.pivot_ratio() <= 64.0 * f64::EPSILON {
        return Err(singular);
    }
    let bl = b.adjoint() * l;
    Ok(l + nn * lu.solve(&bl))
}
