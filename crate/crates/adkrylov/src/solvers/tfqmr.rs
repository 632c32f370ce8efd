//! TFQMR.
//!
//! Transpose-free QMR: two half steps per underlying CGS sweep, each
//! quasi-minimizing over one new direction. The solver reports the
//! quasi-residual bound `tau * sqrt(k + 1)` as its residual norm; the true
//! residual norm never exceeds it, so a tolerance met on the bound is met in
//! truth as well.

use num_traits::Float;

use super::{
    check_system, BreakdownKind, IterationObserver, Preconditioner, Reporter, SolveOutcome,
    SolverConfig, Termination,
};
use crate::scalar::Scalar;
use crate::sparse::{all_primal_finite, axpy, dot, norm2, vsub, CsrMatrix, DenseVector};

/// TFQMR with a fixed shadow residual. One iteration = one half step (one
/// operator product amortized across the sweep).
pub fn tfqmr<S: Scalar>(
    a: &CsrMatrix<S>,
    b: &[S],
    x0: &[S],
    cfg: &SolverConfig,
    precond: &dyn Preconditioner<S>,
    obs: &mut dyn IterationObserver<S::Real>,
) -> SolveOutcome<S> {
    check_system(a, b, x0);
    cfg.validate();
    let n = b.len();
    let bnorm = norm2(b).primal();
    let threshold = cfg.tolerance_as::<S::Real>() * bnorm;

    let mut x: DenseVector<S> = x0.to_vec();
    let mut last_good = x.clone();
    let mut k = 0usize;
    let mut rep = Reporter::<S>::new(obs, cfg.record_every);

    let r0 = precond.apply(&vsub(b, &a.spmv(&x)));
    let mut tau = norm2(&r0);
    let mut last_res = tau.primal();

    if !tau.primal_is_finite() {
        return SolveOutcome {
            solution: last_good,
            iterations_performed: 0,
            termination: Termination::Breakdown {
                kind: BreakdownKind::NonFiniteValue,
                iteration: 0,
            },
            final_residual_norm: tau.primal(),
        };
    }
    if tau.primal() <= threshold {
        return SolveOutcome {
            solution: x,
            iterations_performed: 0,
            termination: Termination::ToleranceMet,
            final_residual_norm: tau.primal(),
        };
    }

    let rhat = r0.clone();
    let mut w = r0.clone();
    let mut y = r0.clone();
    let mut ay = precond.apply(&a.spmv(&y));
    let mut v = ay.clone();
    let mut d: DenseVector<S> = vec![S::zero(); n];
    let mut theta = S::zero();
    let mut eta = S::zero();
    let mut rho = dot(&rhat, &r0);

    if rho.primal_is_zero() {
        // Degenerate start: the shadow product vanishes before any step.
        return SolveOutcome {
            solution: x,
            iterations_performed: 0,
            termination: Termination::Breakdown {
                kind: BreakdownKind::RhoZero,
                iteration: 1,
            },
            final_residual_norm: tau.primal(),
        };
    }

    loop {
        if k >= cfg.max_iterations {
            rep.finish(k, &x, last_res);
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::BudgetExhausted,
                final_residual_norm: last_res,
            };
        }

        let sigma = dot(&rhat, &v);
        let alpha = rho / sigma;
        // y_even = y - alpha * v, and its operator image for the second half
        // step of this sweep.
        let mut y_even = y.clone();
        axpy(-alpha, &v, &mut y_even);
        let ay_even = precond.apply(&a.spmv(&y_even));

        // Two half steps: the first consumes the cached product A*y, the
        // second consumes A*y_even.
        for half in 0..2 {
            let (y_half, ay_half) = if half == 0 {
                (&y, &ay)
            } else {
                (&y_even, &ay_even)
            };
            axpy(-alpha, ay_half, &mut w);
            // d = y_half + (theta^2 * eta / alpha) * d
            let factor = theta * theta * eta / alpha;
            for i in 0..n {
                d[i] = y_half[i] + factor * d[i];
            }
            theta = norm2(&w) / tau;
            let c = S::one() / (S::one() + theta * theta).sqrt();
            tau = tau * theta * c;
            eta = c * c * alpha;
            axpy(eta, &d, &mut x);
            k += 1;

            let kp1 = <S::Real as num_traits::FromPrimitive>::from_usize(k + 1)
                .expect("iteration count representable");
            let res_bound = tau.abs().primal() * Float::sqrt(kp1);
            if !res_bound.is_finite() || !all_primal_finite(&x) {
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
            last_res = res_bound;
            rep.tick(k, &x, res_bound);

            if res_bound <= threshold {
                rep.finish(k, &x, res_bound);
                return SolveOutcome {
                    solution: x,
                    iterations_performed: k,
                    termination: Termination::ToleranceMet,
                    final_residual_norm: res_bound,
                };
            }
            if k == cfg.max_iterations {
                rep.finish(k, &x, res_bound);
                return SolveOutcome {
                    solution: x,
                    iterations_performed: k,
                    termination: Termination::BudgetExhausted,
                    final_residual_norm: res_bound,
                };
            }
        }

        // Sweep bookkeeping for the next pair of half steps.
        let rho_next = dot(&rhat, &w);
        if rho_next.primal_is_zero() {
            rep.finish(k, &x, last_res);
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::Breakdown {
                    kind: BreakdownKind::RhoZero,
                    iteration: k + 1,
                },
                final_residual_norm: last_res,
            };
        }
        let beta = rho_next / rho;
        rho = rho_next;
        // y = w + beta * y_even
        for i in 0..n {
            y[i] = w[i] + beta * y_even[i];
        }
        let ay_next = precond.apply(&a.spmv(&y));
        // v = A*y + beta * (A*y_even + beta * v)
        for i in 0..n {
            v[i] = ay_next[i] + beta * (ay_even[i] + beta * v[i]);
        }
        ay = ay_next;
    }
}
