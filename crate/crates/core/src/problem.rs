//! Problem data and shift lists.

use alloc::vec::Vec;

use crate::dense::{is_exactly_real, CMat, C64};
use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// The quadruple `(A, B, C, E)` of `A^* X E + E^* X A + C^* C - E^* X B B^* X E = 0`.
/// `E` absent means identity; `B` with zero columns is the Lyapunov case.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    a: CscMatrix,
    b: CMat,
    c: CMat,
    e: Option<CscMatrix>,
    is_real: bool,
}

impl ProblemSpec {
    pub fn new(a: CscMatrix, b: CMat, c: CMat, e: Option<CscMatrix>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidProblem("state dimension must be at least 1"));
        }
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "A",
                expected: (n, n),
                found: (a.nrows(), a.ncols()),
            });
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "B",
                expected: (n, b.ncols()),
                found: (b.nrows(), b.ncols()),
            });
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "C",
                expected: (c.nrows(), n),
                found: (c.nrows(), c.ncols()),
            });
        }
        if c.nrows() == 0 {
            return Err(Error::InvalidProblem("C must have at least one row"));
        }
        if let Some(e) = &e {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what: "E",
                    expected: (n, n),
                    found: (e.nrows(), e.ncols()),
                });
            }
        }
        let is_real = a.is_real()
            && is_exactly_real(&b)
            && is_exactly_real(&c)
            && e.as_ref().map_or(true, |e| e.is_real());
        Ok(Self { a, b, c, e, is_real })
    }

    pub fn a(&self) -> &CscMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn c(&self) -> &CMat {
        &self.c
    }

    pub fn e(&self) -> Option<&CscMatrix> {
        self.e.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// `E^* x`, or `x` itself when `E` is absent.
    pub fn apply_e_adjoint(&self, x: &CMat) -> CMat {
        match &self.e {
            Some(e) => e.adjoint_mul_dense(x),
            None => x.clone(),
        }
    }

    /// `E x`, or `x` itself when `E` is absent.
    pub fn apply_e(&self, x: &CMat) -> CMat {
        match &self.e {
            Some(e) => e.mul_dense(x),
            None => x.clone(),
        }
    }
}

/// Ordered shifts, all with strictly positive real part.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftList(Vec<C64>);

impl ShiftList {
    pub fn new(shifts: Vec<C64>) -> Result<Self> {
        for &s in &shifts {
            check_shift(s)?;
        }
        Ok(Self(shifts))
    }

    pub fn shifts(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn check_shift(s: C64) -> Result<()> {
    if s.re > 0.0 && s.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveShift(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c, from_real_rows, zeros};

    #[test]
    fn validates_dimensions_and_realness() {
        let a = CscMatrix::identity(2);
        let p = ProblemSpec::new(a.clone(), zeros(2, 0), from_real_rows(1, 2, &[1.0, 1.0]), None).unwrap();
        assert_eq!((p.n(), p.m(), p.p()), (2, 0, 1));
        assert!(p.is_real());

        let mut cc = from_real_rows(1, 2, &[1.0, 1.0]);
        cc[(0, 1)] = c(1.0, 1e-300);
        assert!(!ProblemSpec::new(a.clone(), zeros(2, 1), cc, None).unwrap().is_real());

        assert!(ProblemSpec::new(a.clone(), zeros(3, 1), zeros(1, 2), None).is_err());
        assert!(ProblemSpec::new(a.clone(), zeros(2, 1), zeros(1, 3), None).is_err());
        assert!(ProblemSpec::new(a.clone(), zeros(2, 1), zeros(0, 2), None).is_err());
        assert!(ProblemSpec::new(a, zeros(2, 1), zeros(1, 2), Some(CscMatrix::identity(3))).is_err());
    }

    #[test]
    fn shift_list_rejects_nonpositive() {
        assert!(ShiftList::new(alloc::vec![c(1.0, 0.0), c(2.0, 3.0)]).is_ok());
        let err = ShiftList::new(alloc::vec![c(-1.0, 0.0)]).unwrap_err();
        assert_eq!(err, Error::NonpositiveShift(c(-1.0, 0.0)));
        assert!(alloc::format!("{err}").contains("shift real part must be positive"));
        assert!(ShiftList::new(alloc::vec![c(0.0, 1.0)]).is_err());
    }
}
