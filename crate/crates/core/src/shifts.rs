//! Shift supply: precomputed lists and the residual Hamiltonian strategy.

use alloc::vec::Vec;

use crate::brad::BradState;
use crate::dense::{lu_solve, orthonormal_basis, zeros, CMat, C64};
use crate::error::{Error, Result};
use crate::problem::{check_shift, ProblemSpec, ShiftList};
use crate::schur::schur;

/// Largest score the Hamiltonian strategy assigns; guards `q^* r` near zero.
pub const SCORE_CLAMP: f64 = 1e12;

/// On real data, shifts whose imaginary part is below this fraction of their modulus
/// are treated as real.
pub const REAL_SNAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSource {
    Precomputed { list: ShiftList, cursor: usize },
    Hamiltonian { window: usize, last_emitted: Vec<C64> },
}

impl ShiftSource {
    pub fn precomputed(list: ShiftList) -> Self {
        ShiftSource::Precomputed { list, cursor: 0 }
    }

    /// `window` is the number of trailing basis columns projected onto; the usual
    /// choice is `6 p`.
    pub fn hamiltonian(window: usize) -> Self {
        ShiftSource::Hamiltonian {
            window: window.max(1),
            last_emitted: Vec::new(),
        }
    }

    /// The next batch of shifts. A precomputed source returns up to `batch`
    /// entries, extended by one when the last entry's conjugate partner follows it
    /// on a real problem (`pair_conjugates`); a batch never contains the same shift
    /// twice. The Hamiltonian source returns one shift or one conjugate pair.
    pub fn next_shifts(
        &mut self,
        state: &BradState,
        problem: &ProblemSpec,
        batch: usize,
        pair_conjugates: bool,
    ) -> Result<Vec<C64>> {
        match self {
            ShiftSource::Precomputed { list, cursor } => {
                let s = list.shifts();
                if *cursor >= s.len() {
                    return Err(Error::ShiftsExhausted);
                }
                let mut out: Vec<C64> = Vec::new();
                while *cursor < s.len() && out.len() < batch.max(1) {
                    let mu = s[*cursor];
                    if out.contains(&mu) {
                        break;
                    }
                    out.push(mu);
                    *cursor += 1;
                    if pair_conjugates && mu.im != 0.0 && *cursor < s.len() && s[*cursor] == mu.conj() {
                        out.push(s[*cursor]);
                        *cursor += 1;
                    }
                }
                Ok(out)
            }
            ShiftSource::Hamiltonian { window, last_emitted } => {
                let out = residual_hamiltonian_shift(state, problem, *window)?;
                *last_emitted = out.clone();
                Ok(out)
            }
        }
    }

    /// Number of precomputed shifts not yet emitted (`None` for adaptive sources).
    pub fn remaining(&self) -> Option<usize> {
        match self {
            ShiftSource::Precomputed { list, cursor } => Some(list.len() - *cursor),
            ShiftSource::Hamiltonian { .. } => None,
        }
    }
}

/// The projected residual Hamiltonian `[[U^* At U, U^* B B^* U], [U^* R R^* U, -U^* At^* U]]`
/// with `At = A - B B^* X E`, and the projected mass `U^* E U` when `E` is present
/// (the eigenproblem is then the pencil with `diag(U^* E U, U^* E^* U)`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedHamiltonian {
    pub h: CMat,
    pub mass: Option<CMat>,
    pub basis: CMat,
}

pub fn projected_hamiltonian(state: &BradState, problem: &ProblemSpec, window: usize) -> ProjectedHamiltonian {
    let q = state.q();
    let u = if q == 0 {
        orthonormal_basis(&problem.c().adjoint())
    } else {
        let l = window.min(q).max(1);
        orthonormal_basis(&state.z().columns(q - l, l).into_owned())
    };
    let k = u.ncols();
    let eu = problem.apply_e(&u);
    let mut au = problem.a().mul_dense(&u);
    if state.m() > 0 && q > 0 {
        au -= problem.b() * (state.sb() * (state.z().adjoint() * &eu));
    }
    let h11 = u.adjoint() * &au;
    let bu = problem.b().adjoint() * &u;
    let ru = state.r().adjoint() * &u;
    let mut h = zeros(2 * k, 2 * k);
    h.view_mut((0, 0), (k, k)).copy_from(&h11);
    h.view_mut((0, k), (k, k)).copy_from(&(bu.adjoint() * &bu));
    h.view_mut((k, 0), (k, k)).copy_from(&(ru.adjoint() * &ru));
    h.view_mut((k, k), (k, k)).copy_from(&(-h11.adjoint()));
    let mass = problem.e().map(|_| u.adjoint() * &eu);
    ProjectedHamiltonian { h, mass, basis: u }
}

impl ProjectedHamiltonian {
    /// The standard eigenproblem matrix `diag(M, M^*)^{-1} H` (just `H` without `E`).
    pub fn standard_form(&self) -> Result<CMat> {
        match &self.mass {
            None => Ok(self.h.clone()),
            Some(m) => {
                let k = m.nrows();
                let top = lu_solve(m, &self.h.rows(0, k).into_owned())?;
                let bottom = lu_solve(&m.adjoint(), &self.h.rows(k, k).into_owned())?;
                let mut out = zeros(2 * k, 2 * k);
                out.rows_mut(0, k).copy_from(&top);
                out.rows_mut(k, k).copy_from(&bottom);
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    lambda: C64,
    score: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.score != b.score {
        return a.score > b.score;
    }
    if a.lambda.im.abs() != b.lambda.im.abs() {
        return a.lambda.im.abs() > b.lambda.im.abs();
    }
    (a.lambda.re, a.lambda.im) < (b.lambda.re, b.lambda.im)
}

/// Next shift(s) from the projected residual Hamiltonian: the stable eigenvalue whose
/// eigenvector `[r; q]` maximizes `||q||^2 / |q^* r|`, reflected to the right
/// half-plane. On real data a complex shift comes with its conjugate.
pub fn residual_hamiltonian_shift(state: &BradState, problem: &ProblemSpec, window: usize) -> Result<Vec<C64>> {
    let ph = projected_hamiltonian(state, problem, window);
    let k = ph.basis.ncols();
    if k == 0 {
        return Err(Error::NoAdmissibleShift);
    }
    let m = ph.standard_form()?;
    let s = schur(&m)?;
    let vecs = s.eigenvectors();
    let mut best: Option<Candidate> = None;
    for (i, lambda) in s.eigenvalues().into_iter().enumerate() {
        if !(lambda.re < 0.0) {
            continue;
        }
        let v = vecs.column(i);
        let r = v.rows(0, k);
        let qv = v.rows(k, k);
        let qn2 = qv.norm_squared();
        if qn2 == 0.0 {
            continue;
        }
        let denom = qv.dotc(&r).norm();
        let score = if denom == 0.0 { SCORE_CLAMP } else { (qn2 / denom).min(SCORE_CLAMP) };
        let cand = Candidate { lambda, score };
        if best.as_ref().map_or(true, |b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    let lambda = best.ok_or(Error::NoAdmissibleShift)?.lambda;
    let mut mu = -lambda;
    if problem.is_real() {
        if mu.im.abs() < REAL_SNAP * mu.norm() {
            mu.im = 0.0;
        }
        if mu.im != 0.0 {
            let up = C64::new(mu.re, mu.im.abs());
            check_shift(up)?;
            return Ok(alloc::vec![up, up.conj()]);
        }
    }
    check_shift(mu)?;
    Ok(alloc::vec![mu])
}
