//! Krylov solvers for square sparse systems, generic over the scalar type.
//!
//! Three methods, each written once against the [`Scalar`] contract so the
//! identical code path runs on plain reals and on dual numbers:
//!
//! * [`gmres_restart`] — restarted GMRES(m): Arnoldi with modified
//!   Gram–Schmidt, Givens rotations on the Hessenberg least-squares problem.
//! * [`bicgstab`] — BiCGStab in van der Vorst's formulation.
//! * [`tfqmr`] — transpose-free QMR with Freund's τ/θ/η weight recurrences.
//!
//! Iteration counting follows the classic sparse-kit convention so budgets
//! mean comparable work: GMRES ticks once per Arnoldi step (one product, so
//! restarts hide nothing), BiCGStab once per full step (two products), TFQMR
//! once per half-sweep (one product).
//!
//! All branch decisions (tolerance tests, breakdown detection) read only
//! primal parts, so a dual run follows the exact branch sequence of the
//! plain run on the same primal data. Tangent overflow therefore never stops
//! a solver; it surfaces as non-finite tangents in whatever the observer
//! records. On a primal breakdown the solver reports the kind and iteration
//! and returns the last iterate whose primal parts were finite — never a
//! NaN-filled vector.

mod bicgstab;
mod gmres;
mod tfqmr;

pub use bicgstab::bicgstab;
pub use gmres::gmres_restart;
pub use tfqmr::tfqmr;

use std::fmt;
use std::str::FromStr;

use crate::scalar::{Real, Scalar};
use crate::sparse::{CsrMatrix, DenseVector};

/// Which Krylov method to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    GmresRestart,
    Bicgstab,
    Tfqmr,
}

impl SolverKind {
    /// All methods, in the canonical reporting order.
    pub const ALL: [SolverKind; 3] = [
        SolverKind::GmresRestart,
        SolverKind::Bicgstab,
        SolverKind::Tfqmr,
    ];

    /// The stable lowercase name used in file formats and on the command
    /// line.
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::GmresRestart => "gmres_restart",
            SolverKind::Bicgstab => "bicgstab",
            SolverKind::Tfqmr => "tfqmr",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gmres_restart" | "gmres" => Ok(SolverKind::GmresRestart),
            "bicgstab" => Ok(SolverKind::Bicgstab),
            "tfqmr" => Ok(SolverKind::Tfqmr),
            other => Err(format!(
                "unknown solver `{other}` (expected gmres_restart, bicgstab, or tfqmr)"
            )),
        }
    }
}

/// Solver run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Method to run.
    pub solver_kind: SolverKind,
    /// Iteration budget (ticks as defined per method above).
    pub max_iterations: usize,
    /// Restart length m for GMRES(m); ignored by the other methods.
    pub gmres_restart_length: usize,
    /// Relative residual stop: finish once ‖r‖ ≤ tolerance·‖b‖. Zero means
    /// run the full budget (the benchmarking mode); an exactly zero residual
    /// still stops early.
    pub residual_tolerance: f64,
    /// Observer cadence: report every k-th iteration (and the final one).
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            solver_kind: SolverKind::GmresRestart,
            max_iterations: 2000,
            gmres_restart_length: 10,
            residual_tolerance: 0.0,
            record_every: 1,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) {
        assert!(self.max_iterations >= 1, "max_iterations must be >= 1");
        assert!(
            self.gmres_restart_length >= 1,
            "gmres_restart_length must be >= 1"
        );
        assert!(self.record_every >= 1, "record_every must be >= 1");
        assert!(
            self.residual_tolerance >= 0.0 && self.residual_tolerance.is_finite(),
            "residual_tolerance must be finite and non-negative"
        );
    }

    pub(crate) fn tolerance_as<R: Real>(&self) -> R {
        R::from_f64(self.residual_tolerance).expect("tolerance representable in scalar type")
    }
}

/// Why a breakdown ended the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BreakdownKind {
    /// A bi-orthogonality coefficient ρ hit exactly zero (BiCGStab, TFQMR).
    RhoZero,
    /// The BiCGStab stabilization weight ω hit exactly zero.
    OmegaZero,
    /// The GMRES least-squares triangle went exactly singular.
    HSingular,
    /// A primal value went non-finite (overflow, 0/0, ∞−∞, ...).
    NonFiniteValue,
}

impl fmt::Display for BreakdownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BreakdownKind::RhoZero => "rho_zero",
            BreakdownKind::OmegaZero => "omega_zero",
            BreakdownKind::HSingular => "h_singular",
            BreakdownKind::NonFiniteValue => "nonfinite_value",
        })
    }
}

/// How a solve ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Ran the full iteration budget without meeting the tolerance.
    BudgetExhausted,
    /// Primal residual norm fell to ≤ tolerance·‖b‖.
    ToleranceMet,
    /// The recurrence broke down at the given iteration.
    Breakdown {
        kind: BreakdownKind,
        iteration: usize,
    },
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::BudgetExhausted => f.write_str("budget_exhausted"),
            Termination::ToleranceMet => f.write_str("tolerance_met"),
            Termination::Breakdown { kind, iteration } => {
                write!(f, "breakdown({kind}@{iteration})")
            }
        }
    }
}

/// Result of a solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome<S: Scalar> {
    /// Final iterate: the converged solution, the budget-limited iterate, or
    /// on breakdown the last iterate whose primal parts were all finite.
    pub solution: DenseVector<S>,
    /// Iterations that performed numerical work (observer ticks).
    pub iterations_performed: usize,
    /// Why the run stopped.
    pub termination: Termination,
    /// The solver's primal residual measure at exit (GMRES: the rotated
    /// least-squares estimate; BiCGStab: ‖r‖; TFQMR: the τ√(m+1) bound).
    pub final_residual_norm: <S as Scalar>::Real,
}

/// Primal and (when the scalar carries one) tangent views of an iterate.
#[derive(Clone, Copy, Debug)]
pub struct IterateView<'a, R> {
    pub primal: &'a [R],
    pub tangent: Option<&'a [R]>,
}

/// Callback invoked with intermediate iterates.
///
/// For a run of `N` iterations with cadence `record_every = r`, the observer
/// is called after every r-th iteration and after the final iteration
/// regardless — `ceil(N / r)` calls in total, each with a strictly larger
/// iteration index than the last. Iterates passed here always have finite
/// primal parts; tangents are reported as-is, non-finite values included.
pub trait IterationObserver<R: Real> {
    fn observe(&mut self, iteration: usize, iterate: IterateView<'_, R>, residual_norm: R);
}

/// Observer that records nothing.
pub struct NoopObserver;

impl<R: Real> IterationObserver<R> for NoopObserver {
    fn observe(&mut self, _: usize, _: IterateView<'_, R>, _: R) {}
}

impl<R: Real, F> IterationObserver<R> for F
where
    F: FnMut(usize, IterateView<'_, R>, R),
{
    fn observe(&mut self, iteration: usize, iterate: IterateView<'_, R>, residual_norm: R) {
        self(iteration, iterate, residual_norm)
    }
}

/// Left preconditioner applied to residuals and operator products.
///
/// Only the identity is shipped: the benchmarks compare differentiation
/// strategies on unpreconditioned methods, and the identity keeps the solves
/// for a value and for its tangent trivially consistent. The trait exists so
/// both solves of a pair demonstrably share one preconditioner object.
pub trait Preconditioner<S: Scalar> {
    /// Applies M⁻¹ to a vector.
    fn apply(&self, v: &[S]) -> DenseVector<S>;
}

/// The identity preconditioner: returns its input unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityPreconditioner;

impl<S: Scalar> Preconditioner<S> for IdentityPreconditioner {
    fn apply(&self, v: &[S]) -> DenseVector<S> {
        v.to_vec()
    }
}

/// Applies the identity preconditioner (returns the vector unchanged).
pub fn apply_identity_preconditioner<S: Scalar>(v: &[S]) -> DenseVector<S> {
    Preconditioner::apply(&IdentityPreconditioner, v)
}

/// Runs the method selected by `cfg.solver_kind`.
pub fn solve_system<S: Scalar>(
    a: &CsrMatrix<S>,
    b: &[S],
    x0: &[S],
    cfg: &SolverConfig,
    precond: &dyn Preconditioner<S>,
    obs: &mut dyn IterationObserver<S::Real>,
) -> SolveOutcome<S> {
    match cfg.solver_kind {
        SolverKind::GmresRestart => gmres_restart(a, b, x0, cfg, precond, obs),
        SolverKind::Bicgstab => bicgstab(a, b, x0, cfg, precond, obs),
        SolverKind::Tfqmr => tfqmr(a, b, x0, cfg, precond, obs),
    }
}

/// Shared observer bookkeeping: cadence, final-call dedup, primal/tangent
/// view buffers.
pub(crate) struct Reporter<'a, S: Scalar> {
    obs: &'a mut dyn IterationObserver<S::Real>,
    every: usize,
    last_emitted: Option<usize>,
    primal: Vec<S::Real>,
    tangent: Vec<S::Real>,
}

impl<'a, S: Scalar> Reporter<'a, S> {
    pub(crate) fn new(obs: &'a mut dyn IterationObserver<S::Real>, every: usize) -> Self {
        Reporter {
            obs,
            every,
            last_emitted: None,
            primal: Vec::new(),
            tangent: Vec::new(),
        }
    }

    fn emit(&mut self, iteration: usize, x: &[S], residual: S::Real) {
        self.primal.clear();
        self.primal.extend(x.iter().map(|s| s.primal()));
        let tangent = if S::CARRIES_TANGENT {
            self.tangent.clear();
            self.tangent.extend(x.iter().map(|s| s.tangent()));
            Some(self.tangent.as_slice())
        } else {
            None
        };
        self.obs.observe(
            iteration,
            IterateView {
                primal: &self.primal,
                tangent,
            },
            residual,
        );
        self.last_emitted = Some(iteration);
    }

    /// Report iteration `k` if the cadence selects it.
    pub(crate) fn tick(&mut self, k: usize, x: &[S], residual: S::Real) {
        if k.is_multiple_of(self.every) {
            self.emit(k, x, residual);
        }
    }

    /// Report the final state at iteration `k` unless it was just reported.
    pub(crate) fn finish(&mut self, k: usize, x: &[S], residual: S::Real) {
        if k > 0 && self.last_emitted != Some(k) {
            self.emit(k, x, residual);
        }
    }
}

/// Checks that system shapes line up; every solver entry point calls this.
pub(crate) fn check_system<S: Scalar>(a: &CsrMatrix<S>, b: &[S], x0: &[S]) {
    assert_eq!(
        a.nrows(),
        a.ncols(),
        "iterative solvers need a square matrix, got {}x{}",
        a.nrows(),
        a.ncols()
    );
    assert_eq!(b.len(), a.nrows(), "right-hand side length mismatch");
    assert_eq!(x0.len(), a.nrows(), "initial guess length mismatch");
}
