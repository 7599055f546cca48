//! The outer iteration: pull shifts, expand, absorb, check the residual.

use alloc::vec::Vec;

use crate::brad::{absorb_r2adi, absorb_radi, expand_batch, init_state, BradState, ExpansionKind};
use crate::dense::{CMat, C64};
use crate::error::{Error, Result};
use crate::kernels::spectral_norm_gram;
use crate::problem::ProblemSpec;
use crate::shifted::DEFAULT_DENSE_THRESHOLD;
use crate::shifts::ShiftSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Open-loop solves with the coupling block `Y12`.
    R2adi,
    /// Closed-loop solves through SMW, no coupling block.
    Radi,
    /// `R2adi` until the basis reaches `hybrid_switch` columns, then `Radi`.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub mode: Mode,
    /// Stop once `||R R^*||_2 / ||C^* C||_2 < tol`.
    pub tol: f64,
    /// Maximum number of absorption steps.
    pub max_iter: usize,
    /// Shifts requested per step from a precomputed source.
    pub parallel_width: usize,
    /// Expand conjugate pairs in real arithmetic; `None` means "iff the problem is real".
    pub realify: Option<bool>,
    /// Column count at which hybrid mode switches; `None` means `min(max(n / 20, 1), 200)`.
    pub hybrid_switch: Option<usize>,
    /// Shifted systems below this size are factored densely.
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mode: Mode::R2adi,
            tol: 1e-9,
            max_iter: 200,
            parallel_width: 1,
            realify: None,
            hybrid_switch: None,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidProblem("tolerance must be positive"));
        }
        if self.parallel_width == 0 {
            return Err(Error::InvalidProblem("parallel width must be at least 1"));
        }
        Ok(())
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub iter: usize,
    pub subspace_dim: usize,
    pub rel_residual: f64,
    pub expansion_s: f64,
    pub absorb_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Converged,
    MaxIterations,
    ShiftsExhausted,
}

impl Status {
    pub fn is_converged(self) -> bool {
        self == Status::Converged
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub factorizations: usize,
    pub complex_factorizations: usize,
    pub realified_blocks: usize,
}

/// `||R R^*||_2 / ||C^* C||_2`, both from `p x p` Gram matrices.
pub fn relative_residual(state: &BradState, problem: &ProblemSpec) -> f64 {
    let cc = spectral_norm_gram(&problem.c().adjoint());
    ratio(spectral_norm_gram(state.r()), cc)
}

fn ratio(rr: f64, cc: f64) -> f64 {
    if cc == 0.0 {
        if rr == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        rr / cc
    }
}

#[cfg(feature = "std")]
mod clock {
    pub type Instant = std::time::Instant;

    pub fn now() -> Instant {
        Instant::now()
    }

    pub fn since(t: Instant) -> f64 {
        t.elapsed().as_secs_f64()
    }
}

#[cfg(not(feature = "std"))]
mod clock {
    pub type Instant = ();

    pub fn now() -> Instant {}

    pub fn since(_: Instant) -> f64 {
        0.0
    }
}

/// Step-wise driver; [`Solver::step`] performs one expansion and absorption so callers
/// can inspect the state between steps.
#[derive(Debug)]
pub struct Solver<'a> {
    problem: &'a ProblemSpec,
    options: SolverOptions,
    source: ShiftSource,
    state: BradState,
    records: Vec<ConvergenceRecord>,
    cc_norm: f64,
    realify: bool,
    hybrid_switch: usize,
    stats: SolveStats,
    status: Status,
    total_s: f64,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a ProblemSpec, options: SolverOptions, source: ShiftSource) -> Result<Self> {
        options.validate()?;
        let realify = options.realify.unwrap_or(problem.is_real());
        if realify && !problem.is_real() {
            return Err(Error::RealificationRequiresRealData);
        }
        let hybrid_switch = options
            .hybrid_switch
            .unwrap_or_else(|| (problem.n() / 20).clamp(1, 200));
        let cc_norm = spectral_norm_gram(&problem.c().adjoint());
        let state = init_state(problem);
        let mut s = Self {
            problem,
            options,
            source,
            state,
            records: Vec::new(),
            cc_norm,
            realify,
            hybrid_switch,
            stats: SolveStats::default(),
            status: Status::Running,
            total_s: 0.0,
        };
        if s.current_residual() < s.options.tol {
            s.status = Status::Converged;
        }
        Ok(s)
    }

    pub fn state(&self) -> &BradState {
        &self.state
    }

    pub fn records(&self) -> &[ConvergenceRecord] {
        &self.records
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    pub fn realify(&self) -> bool {
        self.realify
    }

    pub fn hybrid_switch(&self) -> usize {
        self.hybrid_switch
    }

    pub fn current_residual(&self) -> f64 {
        ratio(spectral_norm_gram(self.state.r()), self.cc_norm)
    }

    /// Whether the next step uses closed-loop solves and the coupling-free absorb.
    fn closed_loop_now(&self) -> bool {
        match self.options.mode {
            Mode::R2adi => false,
            Mode::Radi => true,
            Mode::Hybrid => self.state.q() >= self.hybrid_switch,
        }
    }

    /// Collapses conjugate pairs to one representative when realifying.
    fn representatives(&self, shifts: Vec<C64>) -> Vec<C64> {
        if !self.realify {
            return shifts;
        }
        let mut out: Vec<C64> = Vec::with_capacity(shifts.len());
        for s in shifts {
            if s.im != 0.0 && out.last().map_or(false, |&l| l == s.conj()) {
                continue;
            }
            out.push(s);
        }
        out
    }

    /// Performs one step unless the iteration has already stopped; returns the status
    /// afterwards.
    pub fn step(&mut self) -> Result<Status> {
        if self.status != Status::Running {
            return Ok(self.status);
        }
        if self.records.len() >= self.options.max_iter {
            self.status = Status::MaxIterations;
            return Ok(self.status);
        }
        let t0 = clock::now();
        let pair = self.problem.is_real();
        let shifts = match self
            .source
            .next_shifts(&self.state, self.problem, self.options.parallel_width, pair)
        {
            Ok(s) => s,
            Err(Error::ShiftsExhausted) => {
                self.status = Status::ShiftsExhausted;
                return Ok(self.status);
            }
            Err(e) => return Err(e),
        };
        let shifts = self.representatives(shifts);
        let closed = self.closed_loop_now();

        let te = clock::now();
        let block = expand_batch(
            &self.state,
            self.problem,
            &shifts,
            self.realify,
            closed,
            self.options.dense_threshold,
        )?;
        let expansion_s = clock::since(te);

        let ta = clock::now();
        if closed {
            absorb_radi(&mut self.state, self.problem, &block)?;
        } else {
            absorb_r2adi(&mut self.state, self.problem, &block)?;
        }
        let absorb_s = clock::since(ta);

        self.stats.factorizations += block.factorizations;
        self.stats.complex_factorizations += block.complex_factorizations;
        if block.kind == ExpansionKind::Realified {
            self.stats.realified_blocks += 1;
        }
        let rel = self.current_residual();
        self.total_s += clock::since(t0);
        self.records.push(ConvergenceRecord {
            iter: self.records.len() + 1,
            subspace_dim: self.state.q(),
            rel_residual: rel,
            expansion_s,
            absorb_s,
            total_s: self.total_s,
        });
        if rel < self.options.tol {
            self.status = Status::Converged;
        } else if self.records.len() >= self.options.max_iter {
            self.status = Status::MaxIterations;
        }
        Ok(self.status)
    }

    pub fn run(mut self) -> Result<SolveOutput> {
        while self.step()? == Status::Running {}
        Ok(self.finish())
    }

    pub fn finish(self) -> SolveOutput {
        SolveOutput {
            z: self.state.z_matrix(),
            r: self.state.r().clone(),
            records: self.records,
            status: self.status,
            stats: self.stats,
            state: self.state,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// `X = Z Z^*`.
    pub z: CMat,
    /// The residual equals `R R^*`.
    pub r: CMat,
    pub records: Vec<ConvergenceRecord>,
    pub status: Status,
    pub stats: SolveStats,
    pub state: BradState,
}

pub fn solve(problem: &ProblemSpec, options: SolverOptions, source: ShiftSource) -> Result<SolveOutput> {
    Solver::new(problem, options, source)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c, frobenius};
    use crate::problem::ShiftList;
    use crate::testgen::{scalar_problem, RandomProblem};

    fn shifts(v: &[C64]) -> ShiftSource {
        ShiftSource::precomputed(ShiftList::new(v.to_vec()).unwrap())
    }

    fn x_of(out: &SolveOutput) -> CMat {
        &out.z * out.z.adjoint()
    }

    #[test]
    fn scalar_problem_all_modes() {
        let pr = scalar_problem();
        for mode in [Mode::R2adi, Mode::Radi, Mode::Hybrid] {
            let opts = SolverOptions { mode, ..Default::default() };
            let out = solve(&pr, opts, shifts(&[c(1.0, 0.0), c(2f64.sqrt(), 0.0)])).unwrap();
            assert_eq!(out.status, Status::Converged);
            assert_eq!(out.records.len(), 2);
            assert!((x_of(&out)[(0, 0)].re - (2f64.sqrt() - 1.0)).abs() < 1e-10);
            assert!(out.records[1].rel_residual < 1e-12);
            assert!((out.records[0].rel_residual - 0.04).abs() < 1e-14);
        }
    }

    #[test]
    fn relative_residual_basics() {
        let pr = scalar_problem();
        assert_eq!(relative_residual(&init_state(&pr), &pr), 1.0);
        let p2 = RandomProblem::new(10, 1, 2).build(1);
        assert!((relative_residual(&init_state(&p2), &p2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exhaustion_and_max_iter() {
        let pr = RandomProblem::new(30, 1, 1).build(2);
        let out = solve(&pr, SolverOptions::default(), shifts(&[c(1.0, 0.0)])).unwrap();
        assert_eq!(out.status, Status::ShiftsExhausted);
        assert_eq!(out.records.len(), 1);

        let opts = SolverOptions { max_iter: 2, ..Default::default() };
        let out = solve(&pr, opts, shifts(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)])).unwrap();
        assert_eq!(out.status, Status::MaxIterations);
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn options_validation() {
        let pr = scalar_problem();
        let bad = SolverOptions { tol: 0.0, ..Default::default() };
        assert!(Solver::new(&pr, bad, ShiftSource::hamiltonian(6)).is_err());
        let bad = SolverOptions { parallel_width: 0, ..Default::default() };
        assert!(Solver::new(&pr, bad, ShiftSource::hamiltonian(6)).is_err());
        let cplx = RandomProblem::new(5, 1, 1).complex(true).build(1);
        let bad = SolverOptions { realify: Some(true), ..Default::default() };
        assert_eq!(
            Solver::new(&cplx, bad, ShiftSource::hamiltonian(6)).unwrap_err(),
            Error::RealificationRequiresRealData
        );
    }

    #[test]
    fn modes_agree_and_records_are_consistent() {
        let pr = RandomProblem::new(40, 2, 2).build(21);
        let list = [c(0.5, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(2.0, 0.0), c(4.0, 0.0), c(8.0, 0.0)];
        let mut xs = Vec::new();
        for mode in [Mode::R2adi, Mode::Radi, Mode::Hybrid] {
            let opts = SolverOptions { mode, hybrid_switch: Some(4), ..Default::default() };
            let out = solve(&pr, opts, shifts(&list)).unwrap();
            let mut q = 0;
            for r in &out.records {
                assert!(r.subspace_dim > q);
                q = r.subspace_dim;
            }
            assert_eq!(q, out.z.ncols());
            xs.push(x_of(&out));
        }
        for x in &xs[1..] {
            assert!(frobenius(&(x - &xs[0])) <= 1e-8 * frobenius(&xs[0]));
        }
    }

    #[test]
    fn hamiltonian_shifts_converge() {
        let pr = RandomProblem::new(40, 2, 2).build(5);
        let out = solve(&pr, SolverOptions::default(), ShiftSource::hamiltonian(12)).unwrap();
        assert_eq!(out.status, Status::Converged);
        assert!(out.records.last().unwrap().rel_residual < 1e-9);
        assert!(out.records.len() < 60);
    }
}
