//! Command-line driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use radi_core::dense::{spectral_norm, CMat};
use radi_core::oracle::{dense_care, dense_residual, DENSE_LIMIT};
use radi_core::{Mode, ProblemSpec, ShiftSource, Solver, SolverOptions, Status};

use crate::error::{Error, Result};
use crate::log::write_convergence_log;
use crate::mtx::{read_matrix_market, write_dense};
use crate::shiftfile::read_shift_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    R2adi,
    Radi,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Realify {
    On,
    Off,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Precomputed,
    Hamiltonian,
}

/// Low-rank solution of A^*XE + E^*XA + C^*C - E^*XBB^*XE = 0.
#[derive(Debug, Clone, Parser)]
#[command(name = "radi", version)]
pub struct CliConfig {
    /// System matrix A (n x n)
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    /// Input matrix B (n x m); omit for the Lyapunov case
    #[arg(long, value_name = "FILE")]
    pub b: Option<PathBuf>,
    /// Output matrix C (p x n)
    #[arg(long, value_name = "FILE")]
    pub c: PathBuf,
    /// Mass matrix E (n x n); identity when omitted
    #[arg(long, value_name = "FILE")]
    pub e: Option<PathBuf>,
    /// Shift file, required for the precomputed strategy
    #[arg(long, value_name = "FILE")]
    pub shifts: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "r2adi")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1)]
    pub parallel_width: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub realify: Realify,
    #[arg(long, value_enum, default_value = "precomputed")]
    pub shift_strategy: Strategy,
    /// Trailing basis columns used by the Hamiltonian strategy (default 6p)
    #[arg(long)]
    pub window: Option<usize>,
    /// Basis size at which hybrid mode switches to closed-loop solves
    #[arg(long)]
    pub hybrid_switch: Option<usize>,
    /// Write the factor Z (X = ZZ^*) as a Matrix Market array
    #[arg(long, value_name = "FILE")]
    pub out_z: Option<PathBuf>,
    /// Write the per-step convergence log as CSV
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Compare against a dense solution when n is small enough
    #[arg(long)]
    pub verify: bool,
}

impl CliConfig {
    pub fn check(&self) -> Result<()> {
        match (self.shift_strategy, &self.shifts) {
            (Strategy::Precomputed, None) => Err(Error::Usage(
                "--shifts is required with --shift-strategy precomputed".into(),
            )),
            (Strategy::Hamiltonian, Some(_)) => Err(Error::Usage(
                "--shifts is only used with --shift-strategy precomputed".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            mode: match self.mode {
                ModeArg::R2adi => Mode::R2adi,
                ModeArg::Radi => Mode::Radi,
                ModeArg::Hybrid => Mode::Hybrid,
            },
            tol: self.tol,
            max_iter: self.max_iter,
            parallel_width: self.parallel_width,
            realify: match self.realify {
                Realify::On => Some(true),
                Realify::Off => Some(false),
                Realify::Auto => None,
            },
            hybrid_switch: self.hybrid_switch,
            ..SolverOptions::default()
        }
    }
}

pub fn load_problem(a: &Path, b: Option<&Path>, c: &Path, e: Option<&Path>) -> Result<ProblemSpec> {
    let a = read_matrix_market(a)?.into_sparse();
    let n = a.nrows();
    let b = match b {
        Some(p) => read_matrix_market(p)?.to_dense(),
        None => CMat::zeros(n, 0),
    };
    let c = read_matrix_market(c)?.to_dense();
    let e = match e {
        Some(p) => Some(read_matrix_market(p)?.into_sparse()),
        None => None,
    };
    Ok(ProblemSpec::new(a, b, c, e)?)
}

/// Runs the driver on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match execute(&cfg, out) {
        Ok(Status::Converged) => 0,
        Ok(_) => 2,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Usage(_)) {
                let _ = writeln!(err, "\n{}", <CliConfig as clap::CommandFactory>::command().render_usage());
            }
            1
        }
    }
}

fn execute(cfg: &CliConfig, out: &mut dyn Write) -> Result<Status> {
    cfg.check()?;
    let problem = load_problem(&cfg.a, cfg.b.as_deref(), &cfg.c, cfg.e.as_deref())?;
    let source = match cfg.shift_strategy {
        Strategy::Precomputed => {
            let path = cfg.shifts.as_deref().expect("checked above");
            ShiftSource::precomputed(read_shift_file(path)?)
        }
        Strategy::Hamiltonian => ShiftSource::hamiltonian(cfg.window.unwrap_or(6 * problem.p())),
    };
    let mut solver = Solver::new(&problem, cfg.options(), source)?;
    let mut failure = None;
    loop {
        match solver.step() {
            Ok(Status::Running) => {}
            Ok(_) => break,
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let result = solver.finish();
    if let Some(path) = &cfg.log {
        write_convergence_log(&result.records, path)?;
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    if let Some(path) = &cfg.out_z {
        write_dense(path, &result.z)?;
    }

    let steps = result.records.len();
    let dim = result.z.ncols();
    let relres = result.records.last().map_or(1.0, |r| r.rel_residual);
    let exp: f64 = result.records.iter().map(|r| r.expansion_s).sum();
    let abs: f64 = result.records.iter().map(|r| r.absorb_s).sum();
    let total = result.records.last().map_or(0.0, |r| r.total_s);
    let w = |e: std::io::Error| Error::io(Path::new("<stdout>"), e);
    let status = match result.status {
        Status::Converged => "converged",
        Status::MaxIterations => "not converged (iteration limit)",
        Status::ShiftsExhausted => "not converged (no shifts remain)",
        Status::Running => "not converged",
    };
    writeln!(out, "status: {status}").map_err(w)?;
    writeln!(out, "steps: {steps}").map_err(w)?;
    writeln!(out, "subspace dimension: {dim}").map_err(w)?;
    writeln!(out, "relative residual: {relres:.6e}").map_err(w)?;
    writeln!(out, "time RAD exp.: {exp:.6} s").map_err(w)?;
    writeln!(out, "time absorb (misc.): {abs:.6} s").map_err(w)?;
    writeln!(out, "time total: {total:.6} s").map_err(w)?;
    writeln!(
        out,
        "factorizations: {} ({} complex)",
        result.stats.factorizations, result.stats.complex_factorizations
    )
    .map_err(w)?;

    if cfg.verify {
        if problem.n() <= DENSE_LIMIT {
            let care = dense_care(&problem)?;
            let x = &result.z * result.z.adjoint();
            let rel = spectral_norm(&(&x - &care.x))? / spectral_norm(&care.x)?.max(f64::MIN_POSITIVE);
            let (_, res) = dense_residual(&problem, &x)?;
            let cc = spectral_norm(&(problem.c().adjoint() * problem.c()))?;
            writeln!(out, "verify: rel_error={rel:.6e} dense_relres={:.6e}", res / cc).map_err(w)?;
        } else {
            writeln!(out, "verify: skipped (n = {} exceeds {DENSE_LIMIT})", problem.n()).map_err(w)?;
        }
    }
    writeln!(out, "RESULT iter={steps} dim={dim} relres={relres:.6e}").map_err(w)?;
    Ok(result.status)
}
