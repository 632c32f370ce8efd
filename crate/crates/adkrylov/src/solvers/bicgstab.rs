//! BiCGStab.
//!
//! The stabilized bi-conjugate gradient method: each iteration applies the
//! operator twice (the `p` and `s` products) and smooths the residual with a
//! locally minimizing relaxation factor. Exact zeros in the shadow product
//! `rho` or the relaxation factor `omega` make the recurrences undefined and
//! are reported as breakdowns rather than pushed through as division noise.

use num_traits::Float;

use super::{
    check_system, BreakdownKind, IterationObserver, Preconditioner, Reporter, SolveOutcome,
    SolverConfig, Termination,
};
use crate::scalar::Scalar;
use crate::sparse::{all_primal_finite, axpy, dot, norm2, vsub, CsrMatrix, DenseVector};

/// BiCGStab with a fixed shadow residual (the initial residual). One
/// iteration = one full update of `x` (two operator products).
pub fn bicgstab<S: Scalar>(
    a: &CsrMatrix<S>,
    b: &[S],
    x0: &[S],
    cfg: &SolverConfig,
    precond: &dyn Preconditioner<S>,
    obs: &mut dyn IterationObserver<S::Real>,
) -> SolveOutcome<S> {
    check_system(a, b, x0);
    cfg.validate();
    let bnorm = norm2(b).primal();
    let threshold = cfg.tolerance_as::<S::Real>() * bnorm;

    let mut x: DenseVector<S> = x0.to_vec();
    let mut last_good = x.clone();
    let mut k = 0usize;
    let mut rep = Reporter::<S>::new(obs, cfg.record_every);

    let mut r = precond.apply(&vsub(b, &a.spmv(&x)));
    let rhat = r.clone();
    let mut rnorm = norm2(&r).primal();
    let mut last_res = rnorm;

    if !rnorm.is_finite() {
        return SolveOutcome {
            solution: last_good,
            iterations_performed: 0,
            termination: Termination::Breakdown {
                kind: BreakdownKind::NonFiniteValue,
                iteration: 0,
            },
            final_residual_norm: rnorm,
        };
    }
    if rnorm <= threshold {
        return SolveOutcome {
            solution: x,
            iterations_performed: 0,
            termination: Termination::ToleranceMet,
            final_residual_norm: rnorm,
        };
    }

    let mut p: DenseVector<S> = vec![S::zero(); b.len()];
    let mut v: DenseVector<S> = vec![S::zero(); b.len()];
    let mut rho_prev = S::one();
    let mut alpha = S::one();
    let mut omega = S::one();

    loop {
        if k >= cfg.max_iterations {
            rep.finish(k, &x, rnorm);
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::BudgetExhausted,
                final_residual_norm: rnorm,
            };
        }

        // Shadow product for the step about to run (step k + 1).
        let rho = dot(&rhat, &r);
        if rho.primal_is_zero() || !rho.primal_is_finite() {
            let kind = if rho.primal_is_zero() {
                BreakdownKind::RhoZero
            } else {
                BreakdownKind::NonFiniteValue
            };
            rep.finish(k, &x, rnorm);
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::Breakdown {
                    kind,
                    iteration: k + 1,
                },
                final_residual_norm: rnorm,
            };
        }

        if k == 0 {
            p.clone_from(&r);
        } else {
            let beta = (rho / rho_prev) * (alpha / omega);
            // p = r + beta * (p - omega * v)
            for i in 0..p.len() {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        rho_prev = rho;

        v = precond.apply(&a.spmv(&p));
        let sigma = dot(&rhat, &v);
        alpha = rho / sigma;

        // s = r - alpha * v
        let mut s = r.clone();
        axpy(-alpha, &v, &mut s);
        let snorm = norm2(&s).primal();
        if snorm.is_finite() && snorm <= threshold {
            // The half step already meets the tolerance; take it and stop.
            axpy(alpha, &p, &mut x);
            k += 1;
            if !all_primal_finite(&x) {
                rep.finish(k, &last_good, last_res);
                return SolveOutcome {
                    solution: last_good,
                    iterations_performed: k,
                    termination: Termination::Breakdown {
                        kind: BreakdownKind::NonFiniteValue,
                        iteration: k,
                    },
                    final_residual_norm: last_res,
                };
            }
            rep.finish(k, &x, snorm);
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::ToleranceMet,
                final_residual_norm: snorm,
            };
        }

        let t = precond.apply(&a.spmv(&s));
        omega = dot(&t, &s) / dot(&t, &t);

        // x = x + alpha * p + omega * s ; r = s - omega * t
        axpy(alpha, &p, &mut x);
        axpy(omega, &s, &mut x);
        r = s;
        axpy(-omega, &t, &mut r);
        rnorm = norm2(&r).primal();
        k += 1;

        if !rnorm.is_finite() || !all_primal_finite(&x) {
            rep.finish(k, &last_good, last_res);
            return SolveOutcome {
                solution: last_good,
                iterations_performed: k,
                termination: Termination::Breakdown {
                    kind: BreakdownKind::NonFiniteValue,
                    iteration: k,
                },
                final_residual_norm: last_res,
            };
        }
        last_good.clone_from(&x);
        last_res = rnorm;
        rep.tick(k, &x, rnorm);

        if omega.primal_is_zero() {
            // The step itself is still valid (it reduces to x + alpha*p),
            // but the next direction update would divide by omega.
            rep.finish(k, &x, rnorm);
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::Breakdown {
                    kind: BreakdownKind::OmegaZero,
                    iteration: k,
                },
                final_residual_norm: rnorm,
            };
        }
        if rnorm <= threshold {
            rep.finish(k, &x, rnorm);
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::ToleranceMet,
                final_residual_norm: rnorm,
            };
        }
    }
}
