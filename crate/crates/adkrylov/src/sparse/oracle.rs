//! Dense reference routines: a direct solve and a condition number.
//!
//! These exist to check the sparse iterative machinery, not to be fast. Both
//! densify the matrix and hand it to nalgebra — LU with partial pivoting for
//! the solve, SVD for the condition number — keeping the reference path
//! entirely separate from the Krylov code it is used to judge. Size caps stop
//! accidental densification of genuinely large systems.

use nalgebra as na;
use num_traits::Float;
use thiserror::Error;

use super::CsrMatrix;
use crate::scalar::Real;

/// Largest dimension [`dense_solve`] accepts.
pub const ORACLE_MAX_DIM: usize = 2000;

/// Largest dimension [`condition_number`] accepts.
pub const CONDITION_MAX_DIM: usize = 1000;

/// Errors from the dense reference routines.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("matrix is {nrows}x{ncols}, expected square")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("dimension {n} exceeds the dense-reference cap of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("right-hand side has length {got}, expected {expected}")]
    RhsLength { expected: usize, got: usize },
    #[error("matrix is singular to working precision")]
    Singular,
}

fn densify<R: Real + na::RealField>(a: &CsrMatrix<R>) -> na::DMatrix<R> {
    let mut dense = na::DMatrix::<R>::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplets() {
        dense[(i, j)] = v;
    }
    dense
}

/// Solves `A x = b` by dense LU with partial pivoting.
///
/// Used only as a reference in tests and derivative checks; refuses matrices
/// larger than [`ORACLE_MAX_DIM`] and reports singular-to-working-precision
/// factorizations instead of returning garbage.
pub fn dense_solve<R: Real + na::RealField>(
    a: &CsrMatrix<R>,
    b: &[R],
) -> Result<Vec<R>, OracleError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(OracleError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    if n > ORACLE_MAX_DIM {
        return Err(OracleError::TooLarge {
            n,
            limit: ORACLE_MAX_DIM,
        });
    }
    if b.len() != n {
        return Err(OracleError::RhsLength {
            expected: n,
            got: b.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let lu = densify(a).lu();
    let u = lu.u();
    let mut diag_max = R::zero();
    let mut diag_min = Float::infinity();
    for i in 0..n {
        let d = Float::abs(u[(i, i)]);
        diag_max = Float::max(diag_max, d);
        diag_min = Float::min(diag_min, d);
    }
    let n_as_r = R::from_usize(n).expect("dimension fits in the scalar type");
    if diag_min <= n_as_r * Float::epsilon() * diag_max {
        return Err(OracleError::Singular);
    }
    let rhs = na::DVector::from_column_slice(b);
    let x = lu.solve(&rhs).ok_or(OracleError::Singular)?;
    Ok(x.iter().copied().collect())
}

/// Two-norm condition number: the ratio of the largest to the smallest
/// singular value of the densified matrix. Returns `+∞` for an exactly
/// rank-deficient matrix; refuses matrices larger than
/// [`CONDITION_MAX_DIM`].
pub fn condition_number<R: Real + na::RealField>(a: &CsrMatrix<R>) -> Result<R, OracleError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(OracleError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    if n > CONDITION_MAX_DIM {
        return Err(OracleError::TooLarge {
            n,
            limit: CONDITION_MAX_DIM,
        });
    }
    if n == 0 {
        return Ok(R::one());
    }

    let sv = densify(a).singular_values();
    let mut smax = R::zero();
    let mut smin = Float::infinity();
    for &s in sv.iter() {
        smax = Float::max(smax, s);
        smin = Float::min(smin, s);
    }
    if smin == R::zero() {
        return Ok(Float::infinity());
    }
    Ok(smax / smin)
}
