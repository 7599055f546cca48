//! Seeded random test problems.
//!
//! `A` is sparse with a negative definite Hermitian part (so every generalized
//! eigenvalue with a Hermitian positive definite `E` lies in the open left half-plane);
//! `E`, when requested, is the identity plus a small Hermitian tridiagonal perturbation.

use alloc::vec::Vec;

use crate::dense::{c, CMat, C64};
use crate::problem::ProblemSpec;
use crate::sparse::CscMatrix;

/// SplitMix64; small, seedable and identical on every platform.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    fn entry(&mut self, complex: bool) -> C64 {
        let re = self.symmetric();
        let im = if complex { self.symmetric() } else { 0.0 };
        c(re, im)
    }

    pub fn dense(&mut self, rows: usize, cols: usize, complex: bool) -> CMat {
        CMat::from_fn(rows, cols, |_, _| self.entry(complex))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomProblem {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub complex: bool,
    pub with_e: bool,
    /// Off-diagonal entries per row of `A`.
    pub per_row: usize,
}

impl RandomProblem {
    pub fn new(n: usize, m: usize, p: usize) -> Self {
        Self {
            n,
            m,
            p,
            complex: false,
            with_e: false,
            per_row: 3,
        }
    }

    pub fn complex(mut self, complex: bool) -> Self {
        self.complex = complex;
        self
    }

    pub fn with_e(mut self, with_e: bool) -> Self {
        self.with_e = with_e;
        self
    }

    pub fn build(&self, seed: u64) -> ProblemSpec {
        let mut rng = Rng::new(seed);
        let n = self.n;
        let a = stable_sparse(n, self.per_row, self.complex, &mut rng);
        let b = rng.dense(n, self.m, self.complex);
        let cm = rng.dense(self.p, n, self.complex);
        let e = if self.with_e {
            Some(hermitian_mass(n, self.complex, &mut rng))
        } else {
            None
        };
        ProblemSpec::new(a, b, cm, e).expect("consistent random problem")
    }
}

/// Sparse matrix whose Hermitian part is negative definite by a Gershgorin margin.
pub fn stable_sparse(n: usize, per_row: usize, complex: bool, rng: &mut Rng) -> CscMatrix {
    let mut t: Vec<(usize, usize, C64)> = Vec::new();
    let mut row_sum = alloc::vec![0.0; n];
    let mut col_sum = alloc::vec![0.0; n];
    if n > 1 {
        for i in 0..n {
            for _ in 0..per_row {
                let j = rng.below(n);
                if j == i {
                    continue;
                }
                let v = rng.entry(complex);
                row_sum[i] += v.norm();
                col_sum[j] += v.norm();
                t.push((i, j, v));
            }
        }
    }
    for i in 0..n {
        let margin = 0.2 + 2.0 * rng.uniform();
        let im = if complex { 0.5 * rng.symmetric() } else { 0.0 };
        t.push((i, i, c(-(row_sum[i] + col_sum[i]) / 2.0 - margin, im)));
    }
    CscMatrix::from_triplets(n, n, &t).expect("indices in range")
}

/// Identity plus a Hermitian tridiagonal perturbation of norm below 0.5.
pub fn hermitian_mass(n: usize, complex: bool, rng: &mut Rng) -> CscMatrix {
    let mut t: Vec<(usize, usize, C64)> = (0..n).map(|i| (i, i, c(1.0 + 0.5 * rng.uniform(), 0.0))).collect();
    for i in 1..n {
        let v = rng.entry(complex) * 0.2;
        t.push((i, i - 1, v));
        t.push((i - 1, i, if complex { v.conj() } else { v }));
    }
    CscMatrix::from_triplets(n, n, &t).expect("indices in range")
}

/// `A = -1, B = 1, C = 1`: stabilizing solution `sqrt(2) - 1`.
pub fn scalar_problem() -> ProblemSpec {
    ProblemSpec::new(
        CscMatrix::from_triplets(1, 1, &[(0, 0, c(-1.0, 0.0))]).expect("1x1"),
        CMat::from_element(1, 1, c(1.0, 0.0)),
        CMat::from_element(1, 1, c(1.0, 0.0)),
        None,
    )
    .expect("scalar problem")
}

/// Diagonal `A` with `B = 0` (Lyapunov case) and the given output row.
pub fn diagonal_lyapunov(diag: &[f64], c_row: &[f64]) -> ProblemSpec {
    let n = diag.len();
    let t: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, c(v, 0.0))).collect();
    ProblemSpec::new(
        CscMatrix::from_triplets(n, n, &t).expect("diagonal"),
        CMat::zeros(n, 0),
        CMat::from_fn(1, n, |_, j| c(c_row[j], 0.0)),
        None,
    )
    .expect("diagonal Lyapunov problem")
}
