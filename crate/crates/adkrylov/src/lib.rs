//! Sparse Krylov solvers that can be differentiated two ways.
//!
//! The solvers (restarted GMRES, BiCGStab, TFQMR) are written once, generic
//! over a [`scalar::Scalar`] type. Instantiated at `f32`/`f64` they are
//! ordinary iterative solvers; instantiated at [`Dual32`]/[`Dual64`] they
//! propagate a forward-mode tangent through every arithmetic operation while
//! branching on primal values only — so a dual run walks the exact same
//! iteration path as the matching real run, bit for bit.
//!
//! On top of the solvers sit:
//!
//! * [`sparse`] — CSR matrices, Matrix Market I/O, and small dense direct
//!   oracles (LU solve, SVD condition number) for checking the iterative
//!   results against something independent;
//! * [`autodiff`] — tangent problems with manufactured exact solutions and
//!   the two differentiation strategies: dual-number solves
//!   ([`autodiff::solve_lowlevel`]) versus a second tangent solve
//!   ([`autodiff::solve_highlevel`]);
//! * [`experiment`] — per-iteration error traces, parallel experiment
//!   grids, and data profiles for comparing the strategies across many
//!   problems.

pub mod autodiff;
pub mod experiment;
pub mod scalar;
pub mod solvers;
pub mod sparse;

pub use autodiff::{
    finite_difference_reference, manufacture_problem, problem_seed, solve_highlevel,
    solve_highlevel_with, solve_lowlevel, solve_lowlevel_with, solve_original, HighlevelResult,
    LowlevelResult, TangentProblem,
};
pub use experiment::{
    data_profile, first_solved_iteration, run_grid, run_instance, DataProfileCurve, ErrorColumn,
    IterationTrace, Strategy, TraceRecord, TraceValue,
};
pub use scalar::{Dual, Real, Scalar};
pub use solvers::{
    solve_system, BreakdownKind, IdentityPreconditioner, IterateView, IterationObserver,
    NoopObserver, Preconditioner, SolveOutcome, SolverConfig, SolverKind, Termination,
};
pub use sparse::{
    condition_number, dense_solve, parse_matrix_market, parse_matrix_market_str,
    read_matrix_market_file, write_matrix_market, CsrMatrix, DenseVector, MatrixMarketError,
    OracleError,
};

/// Dual numbers over `f32`.
pub type Dual32 = Dual<f32>;
/// Dual numbers over `f64`.
pub type Dual64 = Dual<f64>;
