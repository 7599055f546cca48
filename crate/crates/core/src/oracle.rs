//! Dense reference computations for small problems.

use alloc::vec::Vec;

use crate::brad::{multiset_distance, BradState};
use crate::dense::{frobenius, hermitian_part, identity, lu_solve, spectral_norm, zeros, CMat, C64};
use crate::error::{Error, Result};
use crate::kernels::{quasi_blocks, quasi_triangular_eigenvalues};
use crate::problem::ProblemSpec;
use crate::schur::{eigenvalues, schur};

/// Largest state dimension the dense routines accept.
pub const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    pub x: CMat,
    /// Eigenvalues of `A E^{-1} - B B^* X`.
    pub closed_loop_spectrum: Vec<C64>,
}

fn check_size(problem: &ProblemSpec) -> Result<()> {
    if problem.n() > DENSE_LIMIT {
        return Err(Error::InvalidProblem("dense oracle limited to small problems"));
    }
    Ok(())
}

/// `(A E^{-1}, C E^{-1})`; `E` is only ever inverted here.
fn transformed(problem: &ProblemSpec) -> Result<(CMat, CMat)> {
    let a = problem.a().to_dense();
    let c = problem.c().clone();
    match problem.e() {
        None => Ok((a, c)),
        Some(e) => {
            let et = e.to_dense().transpose();
            // X E = Y  <=>  E^T X^T = Y^T
            let ah = lu_solve(&et, &a.transpose())?.transpose();
            let ch = lu_solve(&et, &c.transpose())?.transpose();
            Ok((ah, ch))
        }
    }
}

/// Stabilizing solution from the ordered Schur form of the Hamiltonian
/// `[[A, -B B^*], [-C^* C, -A^*]]` (with `A E^{-1}`, `C E^{-1}` in the generalized case).
pub fn dense_care(problem: &ProblemSpec) -> Result<DenseSolution> {
    check_size(problem)?;
    let n = problem.n();
    let (a, c) = transformed(problem)?;
    let b = problem.b();
    let mut ham = zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(&a);
    ham.view_mut((0, n), (n, n)).copy_from(&(-(b * b.adjoint())));
    ham.view_mut((n, 0), (n, n)).copy_from(&(-(c.adjoint() * &c)));
    ham.view_mut((n, n), (n, n)).copy_from(&(-a.adjoint()));
    let mut s = schur(&ham)?;
    if s.reorder(|l| l.re < 0.0) != n {
        return Err(Error::NoStabilizingSolution);
    }
    let u1 = s.q.view((0, 0), (n, n)).into_owned();
    let u2 = s.q.view((n, 0), (n, n)).into_owned();
    // X = U2 U1^{-1}  <=>  U1^* X^* = U2^*
    let x = lu_solve(&u1.adjoint(), &u2.adjoint()).map_err(|_| Error::NoStabilizingSolution)?;
    let x = hermitian_part(&x.adjoint());
    let closed_loop_spectrum = (0..n).map(|i| s.t[(i, i)]).collect();
    Ok(DenseSolution { x, closed_loop_spectrum })
}

/// `A^* X E + E^* X A + C^* C - E^* X B B^* X E` and its spectral norm.
pub fn dense_residual(problem: &ProblemSpec, x: &CMat) -> Result<(CMat, f64)> {
    check_size(problem)?;
    let n = problem.n();
    if x.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "dense residual X",
            expected: (n, n),
            found: x.shape(),
        });
    }
    let a = problem.a().to_dense();
    let e = problem.e().map_or_else(|| identity(n), |e| e.to_dense());
    let xe = x * &e;
    let axe = a.adjoint() * &xe;
    let bxe = problem.b().adjoint() * &xe;
    let res = &axe + axe.adjoint() + problem.c().adjoint() * problem.c() - bxe.adjoint() * &bxe;
    let norm = spectral_norm(&res)?;
    Ok((res, norm))
}

/// `prod_i (A^* - zeros_i I)(A^* - poles_i I)^{-1} C^*` for a single output (`p = 1`,
/// no `E`).
pub fn rational_residual_factor(problem: &ProblemSpec, poles: &[C64], zeros_: &[C64]) -> Result<CMat> {
    check_size(problem)?;
    if problem.p() != 1 {
        return Err(Error::InvalidProblem("rational residual factor needs a single output"));
    }
    if problem.e().is_some() {
        return Err(Error::InvalidProblem("rational residual factor is defined for E = I"));
    }
    if poles.len() != zeros_.len() {
        return Err(Error::DimensionMismatch {
            what: "zeros and poles",
            expected: (poles.len(), 1),
            found: (zeros_.len(), 1),
        });
    }
    let n = problem.n();
    let ah = problem.a().to_dense().adjoint();
    let mut v = problem.c().adjoint();
    for (&s, &l) in poles.iter().zip(zeros_) {
        let shifted = &ah - identity(n) * s;
        v = lu_solve(&shifted, &v).map_err(|_| Error::SingularShiftedMatrix { shift: s })?;
        v = &ah * &v - &v * l;
    }
    Ok(v)
}

/// Roots of the residual's rational function for a normalized single-output state:
/// the eigenvalues of `Hm - h^* h`.
pub fn residual_zeros(state: &BradState) -> Result<Vec<C64>> {
    eigenvalues(&(state.hminus() - state.h().adjoint() * state.h()))
}

/// The closed-loop matrix `Hm - (SB^* SB + h^* h)` must equal `-Hm^*`, so its spectrum
/// is the reflection `-conj(poles)`. Returns the largest of: the mismatch between
/// `Lambda(Hm)` and the poles, the mismatch between the eigenvalues of the closed-loop
/// matrix's diagonal blocks and `-conj(poles)`, and the relative size of its entries
/// outside the lower block structure that `-Hm^*` has.
pub fn closed_loop_pole_check(state: &BradState) -> f64 {
    let hm = state.hminus();
    let q = hm.nrows();
    if q == 0 {
        return 0.0;
    }
    let Some(blocks) = quasi_blocks(hm, true) else {
        return f64::INFINITY;
    };
    let poles = state.poles();
    let d_open = multiset_distance(&quasi_triangular_eigenvalues(hm, &blocks), poles);

    let m = hm - (state.sb().adjoint() * state.sb() + state.h().adjoint() * state.h());
    // Lower quasi-triangular structure mirrors the blocks of Hm; read the diagonal
    // blocks through the adjoint so the same helper applies.
    let mt = -m.adjoint();
    let reflected: Vec<C64> = quasi_triangular_eigenvalues(&mt, &blocks)
        .into_iter()
        .map(|l| -l.conj())
        .collect();
    let target: Vec<C64> = poles.iter().map(|p| -p.conj()).collect();
    let d_closed = multiset_distance(&reflected, &target);

    let mut block_of = alloc::vec![0usize; q];
    for (k, &(s, size)) in blocks.iter().enumerate() {
        for i in s..s + size {
            block_of[i] = k;
        }
    }
    let mut outside = 0.0;
    for j in 0..q {
        for i in 0..j {
            if block_of[i] != block_of[j] {
                outside += m[(i, j)].norm_sqr();
            }
        }
    }
    let d_struct = num_traits::Float::sqrt(outside) / frobenius(&m).max(f64::MIN_POSITIVE);
    d_open.max(d_closed).max(d_struct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brad::{absorb_r2adi, expand_simple, init_state};
    use crate::dense::c;
    use crate::testgen::{diagonal_lyapunov, scalar_problem, RandomProblem};

    #[test]
    fn scalar_care() {
        let sol = dense_care(&scalar_problem()).unwrap();
        assert!((sol.x[(0, 0)] - c(2f64.sqrt() - 1.0, 0.0)).norm() < 1e-14);
        assert!((sol.closed_loop_spectrum[0] - c(-(2f64.sqrt()), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn zero_output_gives_zero_solution() {
        let pr = ProblemSpec::new(
            crate::sparse::CscMatrix::from_triplets(2, 2, &[(0, 0, c(-1.0, 0.0)), (1, 1, c(-2.0, 0.0))]).unwrap(),
            CMat::from_element(2, 1, c(1.0, 0.0)),
            zeros(1, 2),
            None,
        )
        .unwrap();
        let sol = dense_care(&pr).unwrap();
        assert!(frobenius(&sol.x) < 1e-14);
    }

    #[test]
    fn lyapunov_entrywise_formula() {
        let pr = diagonal_lyapunov(&[-1.0, -2.0], &[1.0, 1.0]);
        let x = dense_care(&pr).unwrap().x;
        let expect = [[0.5, 1.0 / 3.0], [1.0 / 3.0, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((x[(i, j)] - c(expect[i][j], 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn residual_of_zero_and_of_care_solution() {
        for with_e in [false, true] {
            let pr = RandomProblem::new(30, 2, 2).complex(true).with_e(with_e).build(3);
            let cc = pr.c().adjoint() * pr.c();
            let (r0, _) = dense_residual(&pr, &zeros(30, 30)).unwrap();
            assert!(frobenius(&(r0 - &cc)) < 1e-14);
            let sol = dense_care(&pr).unwrap();
            let (_, nrm) = dense_residual(&pr, &sol.x).unwrap();
            assert!(nrm <= 1e-8 * spectral_norm(&cc).unwrap());
            assert!(sol.closed_loop_spectrum.iter().all(|l| l.re < 0.0));
            let ev = crate::dense::hermitian_eigenvalues(&sol.x).unwrap();
            assert!(ev[0] >= -1e-10);
        }
    }

    #[test]
    fn rational_factor_identities() {
        let pr = diagonal_lyapunov(&[-1.0, -2.0], &[1.0, 1.0]);
        let poles = [c(1.0, 0.0), c(2.0, 1.0)];
        assert!(frobenius(&(rational_residual_factor(&pr, &poles, &poles).unwrap() - pr.c().adjoint())) < 1e-15);
        let lambda = c(-0.3, 0.2);
        let v = rational_residual_factor(&pr, &[c(1.0, 0.0)], &[lambda]).unwrap();
        for (i, a) in [-1.0, -2.0].iter().enumerate() {
            let expect = (c(*a, 0.0) - lambda) / (c(*a, 0.0) - c(1.0, 0.0));
            assert!((v[(i, 0)] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn closed_loop_check_on_scalar_and_corrupted_states() {
        let pr = scalar_problem();
        let mut st = init_state(&pr);
        let blk = expand_simple(&st, &pr, c(1.0, 0.0), false).unwrap();
        absorb_r2adi(&mut st, &pr, &blk).unwrap();
        assert!(closed_loop_pole_check(&st) < 1e-14);
        let z = residual_zeros(&st).unwrap();
        assert!((z[0] - c(-0.6, 0.0)).norm() < 1e-14);

        let pr = RandomProblem::new(30, 2, 2).build(6);
        let mut st = init_state(&pr);
        for mu in [c(1.0, 0.0), c(2.0, 0.0)] {
            let blk = expand_simple(&st, &pr, mu, false).unwrap();
            absorb_r2adi(&mut st, &pr, &blk).unwrap();
            assert!(closed_loop_pole_check(&st) <= 1e-8);
        }
        st.h_mut()[(0, 1)] += c(0.5, 0.0);
        assert!(closed_loop_pole_check(&st) > 1e-3);
    }
}
