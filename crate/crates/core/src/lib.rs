//! Low-rank ADI solvers for large (generalized) continuous-time algebraic Riccati
//! equations `A^* X E + E^* X A + C^* C - E^* X B B^* X E = 0`.
//!
//! The approximation `X = Z Z^*` is built from a block rational Arnoldi decomposition
//! whose residual `R R^*` has rank `p` at every step. Two absorb rules are provided
//! (with and without the coupling block `Y12`), three expansion kinds (simple,
//! parallel, realified) and two shift sources (precomputed, residual Hamiltonian).
//!
//! Builds without `std` (disable the default feature); then parallel expansions run
//! sequentially and timings read zero.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod brad;
pub mod dense;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod problem;
pub mod schur;
pub mod shifted;
pub mod shifts;
pub mod solver;
pub mod sparse;
pub mod testgen;

pub use brad::{BradState, ExpansionBlock, ExpansionKind};
pub use dense::{CMat, C64};
pub use error::{Error, Result};
pub use problem::{ProblemSpec, ShiftList};
pub use shifts::ShiftSource;
pub use solver::{solve, ConvergenceRecord, Mode, SolveOutput, Solver, SolverOptions, Status};
pub use sparse::CscMatrix;
