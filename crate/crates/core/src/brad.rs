//! The running block rational Arnoldi decomposition and its expansion/absorption.
//!
//! The state is kept in the normalized form in which the small Lyapunov equation
//! `Y Hm + Hm^* Y = SB^* SB + h^* h` is solved by `Y = I`; then `X = Z Z^*` and the
//! residual is `R R^*`. With a mass matrix `E` everything is expressed in the
//! variables of `A E^{-1}` without ever forming `E^{-1}`: solves use `A^* - mu E^*`
//! and the residual and feedback factors carry a leading `E^*`.

use alloc::vec::Vec;

use crate::dense::{
    frobenius, gram_schmidt_qr, is_exactly_real, solve_right_upper, zeros, CMat, ColumnStore, C64,
};
use crate::error::{Error, Result};
use crate::kernels::{
    cholesky_upper, quasi_blocks, quasi_triangular_eigenvalues, solve_lyapunov_small,
    solve_sylvester_small, SmallHermitian,
};
use crate::problem::{check_shift, ProblemSpec};
use crate::schur::eigenvalues;
use crate::shifted::{factorize_with, smw_solve, solve_factored, DEFAULT_DENSE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionKind {
    Simple,
    Parallel,
    Realified,
}

/// Output of one expansion before absorption: the new basis block `Ztil` together
/// with the coefficients `A^* Ztil = C^* U1 + Z U2 + Ztil D` (in transformed variables).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionBlock {
    pub ztil: CMat,
    pub u1: CMat,
    pub u2: CMat,
    pub d: CMat,
    pub kind: ExpansionKind,
    /// The shifts that were solved with, in input order.
    pub shifts: Vec<C64>,
    /// Eigenvalues of `D`, one per column.
    pub poles: Vec<C64>,
    pub closed_loop: bool,
    pub factorizations: usize,
    pub complex_factorizations: usize,
}

impl ExpansionBlock {
    pub fn cols(&self) -> usize {
        self.ztil.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BradState {
    n: usize,
    p: usize,
    m: usize,
    z: ColumnStore,
    h: CMat,
    hminus: CMat,
    sb: CMat,
    r: CMat,
    k: CMat,
    poles: Vec<C64>,
    kinds: Vec<(ExpansionKind, usize)>,
}

pub fn init_state(problem: &ProblemSpec) -> BradState {
    let (n, p, m) = (problem.n(), problem.p(), problem.m());
    BradState {
        n,
        p,
        m,
        z: ColumnStore::new(n),
        h: zeros(p, 0),
        hminus: zeros(0, 0),
        sb: zeros(m, 0),
        r: problem.c().adjoint(),
        k: zeros(n, m),
        poles: Vec::new(),
        kinds: Vec::new(),
    }
}

impl BradState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of accumulated basis columns.
    pub fn q(&self) -> usize {
        self.z.ncols()
    }

    pub fn z(&self) -> nalgebra::DMatrixView<'_, C64> {
        self.z.view()
    }

    pub fn z_matrix(&self) -> CMat {
        self.z.to_matrix()
    }

    /// Raw column-major storage of `Z`; exposed for tests that corrupt the state.
    pub fn z_storage_mut(&mut self) -> &mut [C64] {
        self.z.as_mut_slice()
    }

    pub fn h(&self) -> &CMat {
        &self.h
    }

    pub fn h_mut(&mut self) -> &mut CMat {
        &mut self.h
    }

    pub fn hminus(&self) -> &CMat {
        &self.hminus
    }

    pub fn sb(&self) -> &CMat {
        &self.sb
    }

    pub fn r(&self) -> &CMat {
        &self.r
    }

    pub fn k(&self) -> &CMat {
        &self.k
    }

    /// Eigenvalues of every absorbed `D`, one per column of `Z`.
    pub fn poles(&self) -> &[C64] {
        &self.poles
    }

    /// Kind and column count of every absorbed block, in order.
    pub fn blocks(&self) -> &[(ExpansionKind, usize)] {
        &self.kinds
    }

    /// True iff every stored array has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.z.as_slice().iter().all(|v| v.im == 0.0)
            && is_exactly_real(&self.h)
            && is_exactly_real(&self.hminus)
            && is_exactly_real(&self.sb)
            && is_exactly_real(&self.r)
            && is_exactly_real(&self.k)
    }

    /// Eigenvalues of `Hminus`, read from its quasi-triangular diagonal blocks
    /// (falls back to a Schur decomposition if the structure was lost).
    pub fn hminus_eigenvalues(&self) -> Result<Vec<C64>> {
        match quasi_blocks(&self.hminus, true) {
            Some(blocks) => Ok(quasi_triangular_eigenvalues(&self.hminus, &blocks)),
            None => eigenvalues(&self.hminus),
        }
    }
}

/// Simple expansion with one shift (`t = p`).
pub fn expand_simple(state: &BradState, problem: &ProblemSpec, mu: C64, closed_loop: bool) -> Result<ExpansionBlock> {
    expand_batch(state, problem, &[mu], false, closed_loop, DEFAULT_DENSE_THRESHOLD)
}

/// Parallel expansion with `l` pairwise distinct shifts (`t = l p`).
pub fn expand_parallel(
    state: &BradState,
    problem: &ProblemSpec,
    shifts: &[C64],
    closed_loop: bool,
) -> Result<ExpansionBlock> {
    expand_batch(state, problem, shifts, false, closed_loop, DEFAULT_DENSE_THRESHOLD)
}

/// Realified expansion by the conjugate pair `{mu, conj(mu)}` with a single complex
/// solve (`t = 2p`, all outputs real).
pub fn expand_realified(
    state: &BradState,
    problem: &ProblemSpec,
    mu: C64,
    closed_loop: bool,
) -> Result<ExpansionBlock> {
    if mu.im == 0.0 {
        return Err(Error::RealificationRequiresComplexShift(mu));
    }
    expand_batch(state, problem, &[mu], true, closed_loop, DEFAULT_DENSE_THRESHOLD)
}

/// General expansion by a batch of pairwise distinct shifts. With `realify`, every
/// complex entry stands for its conjugate pair and is expanded in real arithmetic
/// (`2p` columns); real entries always contribute `p` columns.
pub fn expand_batch(
    state: &BradState,
    problem: &ProblemSpec,
    shifts: &[C64],
    realify: bool,
    closed_loop: bool,
    dense_threshold: usize,
) -> Result<ExpansionBlock> {
    if shifts.is_empty() {
        return Err(Error::InvalidProblem("expansion needs at least one shift"));
    }
    for (i, &s) in shifts.iter().enumerate() {
        check_shift(s)?;
        let dup = shifts[..i]
            .iter()
            .any(|&o| o == s || (realify && s.im != 0.0 && o == s.conj()));
        if dup {
            return Err(Error::DuplicateShift(s));
        }
    }
    let any_pair = realify && shifts.iter().any(|s| s.im != 0.0);
    if any_pair && !(problem.is_real() && state.is_real()) {
        return Err(Error::RealificationRequiresRealData);
    }

    let solves = solve_all(state, problem, shifts, closed_loop, dense_threshold)?;
    let p = state.p;
    let width = |s: &C64| if realify && s.im != 0.0 { 2 * p } else { p };
    let t: usize = shifts.iter().map(width).sum();
    let mut ztil = zeros(state.n, t);
    let mut u1 = zeros(p, t);
    let mut d = zeros(t, t);
    let mut poles = Vec::with_capacity(t);
    let mut complex_factorizations = 0;
    let mut off = 0;
    for ((w, complex), &mu) in solves.into_iter().zip(shifts) {
        if complex {
            complex_factorizations += 1;
        }
        let pair = realify && mu.im != 0.0;
        if pair {
            for j in 0..p {
                let (c0, c1) = (off + 2 * j, off + 2 * j + 1);
                for i in 0..state.n {
                    ztil[(i, c0)] = C64::new(w[(i, j)].re, 0.0);
                    ztil[(i, c1)] = C64::new(w[(i, j)].im, 0.0);
                }
                u1[(j, c0)] = C64::new(1.0, 0.0);
                d[(c0, c0)] = C64::new(mu.re, 0.0);
                d[(c0, c1)] = C64::new(mu.im, 0.0);
                d[(c1, c0)] = C64::new(-mu.im, 0.0);
                d[(c1, c1)] = C64::new(mu.re, 0.0);
                poles.push(mu);
                poles.push(mu.conj());
            }
        } else {
            ztil.columns_mut(off, p).copy_from(&w);
            for j in 0..p {
                u1[(j, off + j)] = C64::new(1.0, 0.0);
                d[(off + j, off + j)] = mu;
                poles.push(mu);
            }
        }
        off += if pair { 2 * p } else { p };
    }
    let mut u2 = state.h.adjoint() * &u1;
    if shifts.len() > 1 {
        // Solves for nearby shifts are close to collinear; an orthonormal block basis
        // keeps the small Lyapunov and Cholesky steps of the absorb well conditioned.
        if let Some((q, tr)) = gram_schmidt_qr(&ztil) {
            d = solve_right_upper(&tr, &(&tr * &d));
            u1 = solve_right_upper(&tr, &u1);
            u2 = solve_right_upper(&tr, &u2);
            ztil = q;
        }
    }
    let kind = if any_pair {
        ExpansionKind::Realified
    } else if shifts.len() == 1 {
        ExpansionKind::Simple
    } else {
        ExpansionKind::Parallel
    };
    Ok(ExpansionBlock {
        ztil,
        u1,
        u2,
        d,
        kind,
        shifts: shifts.to_vec(),
        poles,
        closed_loop,
        factorizations: shifts.len(),
        complex_factorizations,
    })
}

fn solve_one(
    state: &BradState,
    problem: &ProblemSpec,
    mu: C64,
    closed_loop: bool,
    dense_threshold: usize,
) -> Result<(CMat, bool)> {
    let f = factorize_with(problem.a(), problem.e(), mu, dense_threshold)?;
    let w = if closed_loop && state.m > 0 {
        smw_solve(&f, &state.k, problem.b(), &state.r)?
    } else {
        solve_factored(&f, &state.r)?
    };
    Ok((w, f.is_complex()))
}

#[cfg(feature = "std")]
fn solve_all(
    state: &BradState,
    problem: &ProblemSpec,
    shifts: &[C64],
    closed_loop: bool,
    dense_threshold: usize,
) -> Result<Vec<(CMat, bool)>> {
    if shifts.len() == 1 {
        return Ok(alloc::vec![solve_one(state, problem, shifts[0], closed_loop, dense_threshold)?]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = shifts
            .iter()
            .map(|&mu| scope.spawn(move || solve_one(state, problem, mu, closed_loop, dense_threshold)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("shifted solve thread panicked"))
            .collect()
    })
}

#[cfg(not(feature = "std"))]
fn solve_all(
    state: &BradState,
    problem: &ProblemSpec,
    shifts: &[C64],
    closed_loop: bool,
    dense_threshold: usize,
) -> Result<Vec<(CMat, bool)>> {
    shifts
        .iter()
        .map(|&mu| solve_one(state, problem, mu, closed_loop, dense_threshold))
        .collect()
}

fn check_block(state: &BradState, block: &ExpansionBlock) -> Result<()> {
    let t = block.cols();
    let q = state.q();
    let shapes = [
        ("expansion Ztil", (state.n, t), block.ztil.shape()),
        ("expansion U1", (state.p, t), block.u1.shape()),
        ("expansion U2", (q, t), block.u2.shape()),
        ("expansion D", (t, t), block.d.shape()),
    ];
    for (what, expected, found) in shapes {
        if expected != found {
            return Err(Error::DimensionMismatch { what, expected, found });
        }
    }
    Ok(())
}

fn degenerate(block: &ExpansionBlock, e: Error) -> Error {
    match e {
        Error::NotPositiveDefinite { pivot } => Error::DegenerateExpansion {
            poles: block.shifts.clone(),
            pivot,
        },
        other => other,
    }
}

/// Absorbs a block obtained with open-loop solves.
pub fn absorb_r2adi(state: &mut BradState, problem: &ProblemSpec, block: &ExpansionBlock) -> Result<()> {
    check_block(state, block)?;
    let s_til = problem.b().adjoint() * &block.ztil;
    let y12 = solve_sylvester_small(&state.hminus.adjoint(), &block.d, &(state.sb.adjoint() * &s_til))?;
    let y12u2 = y12.adjoint() * &block.u2;
    let rhs = s_til.adjoint() * &s_til + block.u1.adjoint() * &block.u1 - &y12u2 - y12u2.adjoint();
    let y22 = solve_lyapunov_small(&block.d, &SmallHermitian::new(rhs))?;
    let schur_compl = SmallHermitian::new(y22.into_matrix() - y12.adjoint() * &y12);
    let g22 = cholesky_upper(&schur_compl).map_err(|e| degenerate(block, e))?;

    let u1_hat = solve_right_upper(&g22, &(&block.u1 - &state.h * &y12));
    let u2_hat = solve_right_upper(&g22, &(&block.u2 - &state.hminus * &y12 + &y12 * &block.d));
    let z_hat = solve_right_upper(&g22, &(&block.ztil - state.z() * &y12));
    append(state, problem, block, g22, z_hat, u1_hat, u2_hat);
    Ok(())
}

/// Absorbs a block obtained with closed-loop solves, for which the coupling `Y12`
/// vanishes.
pub fn absorb_radi(state: &mut BradState, problem: &ProblemSpec, block: &ExpansionBlock) -> Result<()> {
    check_block(state, block)?;
    let s_til = problem.b().adjoint() * &block.ztil;
    let rhs = s_til.adjoint() * &s_til + block.u1.adjoint() * &block.u1;
    let y22 = solve_lyapunov_small(&block.d, &SmallHermitian::new(rhs))?;
    let g22 = cholesky_upper(&y22).map_err(|e| degenerate(block, e))?;

    let u1_hat = solve_right_upper(&g22, &block.u1);
    let u2_hat = solve_right_upper(&g22, &(&block.u2 + state.sb.adjoint() * &s_til));
    let z_hat = solve_right_upper(&g22, &block.ztil);
    append(state, problem, block, g22, z_hat, u1_hat, u2_hat);
    Ok(())
}

fn append(
    state: &mut BradState,
    problem: &ProblemSpec,
    block: &ExpansionBlock,
    g22: CMat,
    z_hat: CMat,
    u1_hat: CMat,
    u2_hat: CMat,
) {
    let q = state.q();
    let t = block.cols();
    let d_hat = solve_right_upper(&g22, &(&g22 * &block.d));

    let mut hm = zeros(q + t, q + t);
    hm.view_mut((0, 0), (q, q)).copy_from(&state.hminus);
    hm.view_mut((0, q), (q, t)).copy_from(&u2_hat);
    hm.view_mut((q, q), (t, t)).copy_from(&d_hat);
    state.hminus = hm;

    let mut h = zeros(state.p, q + t);
    h.columns_mut(0, q).copy_from(&state.h);
    h.columns_mut(q, t).copy_from(&u1_hat);
    state.h = h;

    let sb_hat = problem.b().adjoint() * &z_hat;
    let mut sb = zeros(state.m, q + t);
    sb.columns_mut(0, q).copy_from(&state.sb);
    sb.columns_mut(q, t).copy_from(&sb_hat);
    state.sb = sb;

    let ez = problem.apply_e_adjoint(&z_hat);
    state.r += &ez * u1_hat.adjoint();
    if state.m > 0 {
        state.k += &ez * sb_hat.adjoint();
    }
    state.z.push_columns(&z_hat);
    state.poles.extend_from_slice(&block.poles);
    state.kinds.push((block.kind, t));
}

/// Relative defects of the state invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BradDiagnostics {
    /// `||A^* Z - C^* h - E^* Z Hm||_F / (||A||_1 ||Z||_F + ||E||_1 ||Z||_F ||Hm||_F)`
    pub brad_identity: f64,
    /// `||Hm + Hm^* - (SB^* SB + h^* h)||_F / ||Hm||_F`
    pub ytilde_equation: f64,
    /// `||R - C^* - E^* Z h^*||_F / (||C||_F + ||E||_1 ||Z||_F ||h||_F)`
    pub residual_consistency: f64,
    /// Largest relative distance between the eigenvalues of `Hm` and the recorded
    /// poles under a nearest-neighbour matching.
    pub pole_mismatch: f64,
    /// Smallest real part among the recorded poles (`+inf` when there are none).
    pub min_pole_real: f64,
    /// Relative defect of the cached `B^* Z`.
    pub sb_cache: f64,
    /// Relative defect of the cached `E^* Z Z^* B`.
    pub k_cache: f64,
}

fn rel(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Greedy nearest-neighbour matching between two multisets; returns the largest
/// distance relative to `max(1, |b|)`, or infinity if the sizes differ.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = alloc::vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &x in a {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (j, &y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm() / y.norm().max(1.0);
            if d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        if let Some(j) = best {
            used[j] = true;
        }
        worst = worst.max(best_d);
    }
    worst
}

pub fn brad_residual_check(state: &BradState, problem: &ProblemSpec) -> BradDiagnostics {
    let z = state.z_matrix();
    let zf = frobenius(&z);
    let hf = frobenius(&state.hminus);
    let e1 = problem.e().map_or(1.0, |e| e.norm1());
    let c_adj = problem.c().adjoint();

    let lhs = problem.a().adjoint_mul_dense(&z);
    let brad = lhs - &c_adj * &state.h - problem.apply_e_adjoint(&(&z * &state.hminus));
    let brad_identity = rel(frobenius(&brad), problem.a().norm1() * zf + e1 * zf * hf);

    let gram = state.sb.adjoint() * &state.sb + state.h.adjoint() * &state.h;
    let ytil = &state.hminus + state.hminus.adjoint() - gram;
    let ytilde_equation = rel(frobenius(&ytil), hf);

    let res = &state.r - &c_adj - problem.apply_e_adjoint(&(&z * state.h.adjoint()));
    let residual_consistency = rel(
        frobenius(&res),
        frobenius(problem.c()) + e1 * zf * frobenius(&state.h),
    );

    let pole_mismatch = match state.hminus_eigenvalues() {
        Ok(ev) => multiset_distance(&ev, &state.poles),
        Err(_) => f64::INFINITY,
    };
    let min_pole_real = state.poles.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);

    let bz = problem.b().adjoint() * &z;
    let bf = frobenius(problem.b());
    let sb_cache = rel(frobenius(&(&bz - &state.sb)), bf * zf);
    let k_true = problem.apply_e_adjoint(&(&z * bz.adjoint()));
    let k_cache = rel(frobenius(&(&k_true - &state.k)), e1 * zf * zf * bf);

    BradDiagnostics {
        brad_identity,
        ytilde_equation,
        residual_consistency,
        pole_mismatch,
        min_pole_real,
        sb_cache,
        k_cache,
    }
}

impl BradDiagnostics {
    /// All invariants within `tol` (poles within `pole_tol`).
    pub fn holds(&self, tol: f64, pole_tol: f64) -> bool {
        self.brad_identity <= tol
            && self.ytilde_equation <= tol
            && self.residual_consistency <= tol
            && self.pole_mismatch <= pole_tol
            && self.min_pole_real > 0.0
            && self.sb_cache <= tol
            && self.k_cache <= tol
    }
}
