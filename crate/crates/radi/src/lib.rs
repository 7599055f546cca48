//! File formats and command-line driver for the `radi-core` Riccati solvers.

pub mod cli;
pub mod error;
pub mod log;
pub mod mtx;
pub mod shiftfile;

pub use error::{Error, Result};
