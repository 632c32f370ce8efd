//! Tangent problems and the two ways of solving them.
//!
//! A tangent problem carries a linear system `A x = b` together with a
//! perturbation direction `(dA, db)` and asks for the directional derivative
//! `dx` of the solution. Two strategies are offered:
//!
//! * **Low level** ([`solve_lowlevel`]): run the Krylov solver on dual
//!   numbers. The primal lane reproduces the ordinary solve bit for bit
//!   (comparisons look only at primal parts); the tangent lane carries the
//!   derivative of every intermediate quantity, including the derivative of
//!   the iteration path itself.
//! * **High level** ([`solve_highlevel`]): solve `A x = b` for `x`, then
//!   solve `A y = db - dA x` for the tangent. This treats the solver as an
//!   exact solve and differentiates the mathematical solution map instead of
//!   the algorithm.
//!
//! Problems are either manufactured from a seed (so the true solution and
//! tangent are known by construction) or assembled from caller-supplied
//! reference vectors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::{Dual, Real};
use crate::solvers::{
    solve_system, IdentityPreconditioner, IterationObserver, NoopObserver, Preconditioner,
    SolveOutcome, SolverConfig,
};
use crate::sparse::{dense_solve, vsub, CsrMatrix, DenseVector, OracleError};

/// A linear system with a perturbation direction and known references.
///
/// `b` and `db` are always consistent with the references:
/// `b = A x_ref` and `db = dA x_ref + A dx_ref` (with `dA` treated as zero
/// when absent), so `x_ref` is the exact solution and `dx_ref` the exact
/// directional derivative.
#[derive(Debug, Clone)]
pub struct TangentProblem<R: Real> {
    /// System operator.
    pub a: CsrMatrix<R>,
    /// Perturbation of the operator; `None` means the operator is constant.
    /// When present it lives on the same sparsity pattern as `a`.
    pub da: Option<CsrMatrix<R>>,
    /// Right-hand side, `A x_ref`.
    pub b: DenseVector<R>,
    /// Perturbation of the right-hand side, `dA x_ref + A dx_ref`.
    pub db: DenseVector<R>,
    /// Exact solution the problem was manufactured around.
    pub x_ref: DenseVector<R>,
    /// Exact directional derivative of the solution.
    pub dx_ref: DenseVector<R>,
    /// Seed the references were drawn from (zero for hand-built problems).
    pub seed: u64,
}

impl<R: Real> TangentProblem<R> {
    /// Builds a problem around explicit reference vectors, computing the
    /// right-hand sides that make them exact.
    ///
    /// Panics if the operator is not square, if `da` does not share its
    /// shape and sparsity pattern, or if the reference lengths disagree.
    pub fn from_references(
        a: CsrMatrix<R>,
        da: Option<CsrMatrix<R>>,
        x_ref: DenseVector<R>,
        dx_ref: DenseVector<R>,
        seed: u64,
    ) -> Self {
        let n = a.nrows();
        assert_eq!(a.ncols(), n, "tangent problems need a square operator");
        assert_eq!(x_ref.len(), n, "x_ref length must match the operator");
        assert_eq!(dx_ref.len(), n, "dx_ref length must match the operator");
        if let Some(da) = &da {
            assert!(
                a.same_pattern(da),
                "operator perturbation must share the operator's sparsity pattern"
            );
        }
        let b = a.spmv(&x_ref);
        let mut db = a.spmv(&dx_ref);
        if let Some(da) = &da {
            let dax = da.spmv(&x_ref);
            for (dbi, daxi) in db.iter_mut().zip(&dax) {
                *dbi += *daxi;
            }
        }
        TangentProblem {
            a,
            da,
            b,
            db,
            x_ref,
            dx_ref,
            seed,
        }
    }

    /// Central-difference tangent for this problem's own perturbation
    /// direction: differentiates `u ↦ (A + u dA)⁻¹ (b + u db)` at `u = 0`
    /// through the dense oracle. See [`finite_difference_reference`].
    pub fn finite_difference_dx(&self, h: R) -> Result<DenseVector<R>, OracleError>
    where
        R: nalgebra::RealField,
    {
        finite_difference_reference(
            |u| match &self.da {
                None => self.a.clone(),
                Some(da) => self.a.zip_values(da, |av, dav| av + u * dav),
            },
            |u| {
                self.b
                    .iter()
                    .zip(&self.db)
                    .map(|(&bi, &dbi)| bi + u * dbi)
                    .collect()
            },
            R::zero(),
            h,
        )
    }

    /// Manufactures references from `seed`: first `x_ref`, then `dx_ref`,
    /// entries uniform in `[0, 1)`. The same seed always produces the same
    /// problem.
    pub fn manufacture(a: CsrMatrix<R>, da: Option<CsrMatrix<R>>, seed: u64) -> Self {
        let n = a.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |len: usize| -> DenseVector<R> {
            (0..len)
                .map(|_| R::from_f64(rng.gen::<f64>()).expect("unit interval fits any real"))
                .collect()
        };
        let x_ref = draw(n);
        let dx_ref = draw(n);
        Self::from_references(a, da, x_ref, dx_ref, seed)
    }

    /// Problem dimension.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Free-function form of [`TangentProblem::manufacture`].
pub fn manufacture_problem<R: Real>(
    a: CsrMatrix<R>,
    da: Option<CsrMatrix<R>>,
    seed: u64,
) -> TangentProblem<R> {
    TangentProblem::manufacture(a, da, seed)
}

/// Derives a per-problem seed from a base seed and a problem name, so grids
/// of experiments get distinct but reproducible reference vectors. The hash
/// is FNV-1a over the base seed's bytes followed by the name's bytes —
/// deliberately self-contained so the mapping never shifts under toolchain
/// or dependency updates.
pub fn problem_seed(base: u64, name: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in base.to_le_bytes().iter().chain(name.as_bytes()) {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// Lifts a real vector into duals with zero tangents.
pub fn lift_constant_vector<R: Real>(v: &[R]) -> DenseVector<Dual<R>> {
    v.iter().map(|&vi| Dual::constant(vi)).collect()
}

/// Pairs a value vector with its tangent vector.
pub fn lift_vector<R: Real>(v: &[R], dv: &[R]) -> DenseVector<Dual<R>> {
    assert_eq!(v.len(), dv.len(), "value and tangent lengths must match");
    v.iter()
        .zip(dv)
        .map(|(&vi, &dvi)| Dual::new(vi, dvi))
        .collect()
}

/// Lifts an operator into duals, attaching `da` as the tangent when present.
pub fn lift_matrix<R: Real>(a: &CsrMatrix<R>, da: Option<&CsrMatrix<R>>) -> CsrMatrix<Dual<R>> {
    match da {
        None => a.map_values(Dual::constant),
        Some(da) => a.zip_values(da, Dual::new),
    }
}

/// Result of a dual-number (low-level) solve.
#[derive(Debug, Clone)]
pub struct LowlevelResult<R: Real> {
    /// Primal part of the final iterate.
    pub x: DenseVector<R>,
    /// Tangent part of the final iterate.
    pub dx: DenseVector<R>,
    /// The dual solve itself, including termination and iteration count.
    pub outcome: SolveOutcome<Dual<R>>,
}

/// Result of a two-stage (high-level) solve.
#[derive(Debug, Clone)]
pub struct HighlevelResult<R: Real> {
    /// Solution of the primal stage `A x = b`.
    pub x: DenseVector<R>,
    /// Solution of the tangent stage `A y = db - dA x`.
    pub dx: DenseVector<R>,
    /// Outcome of the primal stage.
    pub primal_outcome: SolveOutcome<R>,
    /// Outcome of the tangent stage.
    pub tangent_outcome: SolveOutcome<R>,
}

/// Runs the configured solver on the dual-number lift of the problem,
/// starting from a zero initial guess.
pub fn solve_lowlevel<R: Real>(
    problem: &TangentProblem<R>,
    cfg: &SolverConfig,
    observer: &mut dyn IterationObserver<R>,
) -> LowlevelResult<R> {
    solve_lowlevel_with(problem, cfg, &IdentityPreconditioner, observer)
}

/// [`solve_lowlevel`] with an explicit preconditioner.
pub fn solve_lowlevel_with<R: Real>(
    problem: &TangentProblem<R>,
    cfg: &SolverConfig,
    precond: &dyn Preconditioner<Dual<R>>,
    observer: &mut dyn IterationObserver<R>,
) -> LowlevelResult<R> {
    let a = lift_matrix(&problem.a, problem.da.as_ref());
    let b = lift_vector(&problem.b, &problem.db);
    let x0 = vec![Dual::constant(R::zero()); problem.dim()];
    let outcome = solve_system(&a, &b, &x0, cfg, precond, observer);
    let x = outcome.solution.iter().map(|d| d.value).collect();
    let dx = outcome.solution.iter().map(|d| d.tangent).collect();
    LowlevelResult { x, dx, outcome }
}

/// Solves `A x = b`, forms the tangent right-hand side `db - dA x` from the
/// *computed* solution, and solves `A y = db - dA x` with the same solver
/// configuration. Both stages start from zero initial guesses.
pub fn solve_highlevel<R: Real>(
    problem: &TangentProblem<R>,
    cfg: &SolverConfig,
    observer_x: &mut dyn IterationObserver<R>,
    observer_dx: &mut dyn IterationObserver<R>,
) -> HighlevelResult<R> {
    solve_highlevel_with(
        problem,
        cfg,
        &IdentityPreconditioner,
        observer_x,
        observer_dx,
    )
}

/// [`solve_highlevel`] with an explicit preconditioner. The same
/// preconditioner instance is applied in both stages — the tangent stage
/// reuses whatever the primal stage set up rather than building its own.
pub fn solve_highlevel_with<R: Real>(
    problem: &TangentProblem<R>,
    cfg: &SolverConfig,
    precond: &dyn Preconditioner<R>,
    observer_x: &mut dyn IterationObserver<R>,
    observer_dx: &mut dyn IterationObserver<R>,
) -> HighlevelResult<R> {
    let x0 = vec![R::zero(); problem.dim()];
    let primal_outcome = solve_system(&problem.a, &problem.b, &x0, cfg, precond, observer_x);
    let x = primal_outcome.solution.clone();

    let bhat = match &problem.da {
        None => problem.db.clone(),
        Some(da) => vsub(&problem.db, &da.spmv(&x)),
    };
    let tangent_outcome = solve_system(&problem.a, &bhat, &x0, cfg, precond, observer_dx);
    let dx = tangent_outcome.solution.clone();

    HighlevelResult {
        x,
        dx,
        primal_outcome,
        tangent_outcome,
    }
}

/// Convenience wrapper for the plain (undifferentiated) solve of the
/// problem's system, starting from zero.
pub fn solve_original<R: Real>(
    problem: &TangentProblem<R>,
    cfg: &SolverConfig,
    observer: &mut dyn IterationObserver<R>,
) -> SolveOutcome<R> {
    let x0 = vec![R::zero(); problem.dim()];
    solve_system(
        &problem.a,
        &problem.b,
        &x0,
        cfg,
        &IdentityPreconditioner,
        observer,
    )
}

/// Central-difference reference for a solution tangent, computed entirely
/// with the dense direct solver: `(x(u0+h) - x(u0-h)) / 2h` where
/// `x(u) = A(u)^{-1} b(u)`. The builders describe the parametrized system;
/// nothing here touches a Krylov code path, so this can arbitrate between
/// the two differentiation strategies.
pub fn finite_difference_reference<R, MA, VB>(
    a_of_u: MA,
    b_of_u: VB,
    u0: R,
    h: R,
) -> Result<DenseVector<R>, OracleError>
where
    R: Real + nalgebra::RealField,
    MA: Fn(R) -> CsrMatrix<R>,
    VB: Fn(R) -> DenseVector<R>,
{
    let solve_at = |u: R| dense_solve(&a_of_u(u), &b_of_u(u));
    let x_plus = solve_at(u0 + h)?;
    let x_minus = solve_at(u0 - h)?;
    let two_h = (R::one() + R::one()) * h;
    Ok(x_plus
        .iter()
        .zip(&x_minus)
        .map(|(&p, &m)| (p - m) / two_h)
        .collect())
}

/// Runs the problem's system through the solver without any tangent content
/// and returns the outcome of the dual run; used to check that carrying
/// zero tangents does not perturb the primal iteration.
pub fn solve_lowlevel_zero_tangent<R: Real>(
    problem: &TangentProblem<R>,
    cfg: &SolverConfig,
) -> LowlevelResult<R> {
    let zeroed = TangentProblem {
        a: problem.a.clone(),
        da: None,
        b: problem.b.clone(),
        db: vec![R::zero(); problem.dim()],
        x_ref: problem.x_ref.clone(),
        dx_ref: vec![R::zero(); problem.dim()],
        seed: problem.seed,
    };
    solve_lowlevel(&zeroed, cfg, &mut NoopObserver)
}
