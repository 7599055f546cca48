use core::fmt;

use num_complex::Complex64;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the solver stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not fit together.
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// A problem description violates one of its structural invariants.
    InvalidProblem(&'static str),
    /// A shift with nonpositive real part was supplied.
    NonpositiveShift(Complex64),
    /// Cholesky breakdown; `pivot` is the zero-based index of the failing pivot.
    NotPositiveDefinite { pivot: usize },
    /// The small Sylvester/Lyapunov operator is singular: `eigenvalue` of the
    /// left coefficient is (numerically) the negative of an eigenvalue of the right one.
    SingularSylvester { eigenvalue: Complex64 },
    /// Dense matrix is singular; `pivot` is the first vanishing elimination step.
    Singular { pivot: usize },
    /// The QR iteration for the Schur form did not converge.
    SchurNoConvergence,
    /// `A^* - mu E^*` is singular.
    SingularShiftedMatrix { shift: Complex64 },
    /// `I_m - B^* N` in the Sherman-Morrison-Woodbury solve is singular.
    SmwCapacitanceSingular { shift: Complex64 },
    /// The expansion could not be absorbed because the updated Gram block lost
    /// positive definiteness.
    DegenerateExpansion { poles: alloc::vec::Vec<Complex64>, pivot: usize },
    /// A batch of parallel shifts contained the same shift twice.
    DuplicateShift(Complex64),
    /// Realified expansion requested on complex data or for a real shift.
    RealificationRequiresRealData,
    RealificationRequiresComplexShift(Complex64),
    /// Shift source ran out.
    ShiftsExhausted,
    /// The residual Hamiltonian strategy found no eigenvalue in the open left half-plane.
    NoAdmissibleShift,
    /// Dense reference solver could not isolate a stabilizing invariant subspace.
    NoStabilizingSolution,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch in {what}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidProblem(msg) => write!(f, "invalid problem: {msg}"),
            Error::NonpositiveShift(s) => {
                write!(f, "shift real part must be positive (got {} {:+}i)", s.re, s.im)
            }
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            Error::SingularSylvester { eigenvalue } => write!(
                f,
                "shift condition violated: Sylvester operator singular near eigenvalue {} {:+}i",
                eigenvalue.re, eigenvalue.im
            ),
            Error::Singular { pivot } => write!(f, "matrix is singular (pivot {pivot})"),
            Error::SchurNoConvergence => write!(f, "QR iteration for Schur form did not converge"),
            Error::SingularShiftedMatrix { shift } => write!(
                f,
                "shifted matrix A^* - mu E^* is singular for mu = {} {:+}i",
                shift.re, shift.im
            ),
            Error::SmwCapacitanceSingular { shift } => write!(
                f,
                "SMW capacitance singular for mu = {} {:+}i (shift hits closed-loop spectrum)",
                shift.re, shift.im
            ),
            Error::DegenerateExpansion { poles, pivot } => {
                write!(
                    f,
                    "expansion degenerate (near-deflation or repeated pole) at Cholesky pivot {pivot}; poles:"
                )?;
                for p in poles {
                    write!(f, " {} {:+}i", p.re, p.im)?;
                }
                Ok(())
            }
            Error::DuplicateShift(s) => {
                write!(f, "parallel shifts must be pairwise distinct ({} {:+}i repeated)", s.re, s.im)
            }
            Error::RealificationRequiresRealData => write!(f, "realification requires real data"),
            Error::RealificationRequiresComplexShift(s) => write!(
                f,
                "realification requires a shift with nonzero imaginary part (got {} {:+}i)",
                s.re, s.im
            ),
            Error::ShiftsExhausted => write!(f, "no shifts remain"),
            Error::NoAdmissibleShift => write!(f, "shift strategy yielded no admissible shift"),
            Error::NoStabilizingSolution => {
                write!(f, "no stabilizing solution found (ordered Schur failed)")
            }
        }
    }
}

impl core::error::Error for Error {}
