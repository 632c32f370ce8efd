//! Restarted GMRES(m).
//!
//! Arnoldi with modified Gram–Schmidt builds an orthonormal Krylov basis;
//! Givens rotations keep the Hessenberg least-squares problem triangular, so
//! the rotated right-hand side exposes the residual norm of every inner step
//! for free. The iterate is reconstructed after each Arnoldi step — cheap at
//! the short restart lengths used here — so observers see true intermediate
//! solutions rather than per-cycle snapshots.

use num_traits::Float;

use super::{
    check_system, BreakdownKind, IterationObserver, Preconditioner, Reporter, SolveOutcome,
    SolverConfig, Termination,
};
use crate::scalar::Scalar;
use crate::sparse::{all_primal_finite, axpy, dot, norm2, vsub, CsrMatrix, DenseVector};

/// A plane rotation zeroing the second component of `(a, b)`.
/// Both components exactly zero yields the identity rotation; the resulting
/// zero diagonal is then caught as a singular triangle at reconstruction.
fn givens<S: Scalar>(a: S, b: S) -> (S, S) {
    if a.primal_is_zero() && b.primal_is_zero() {
        (S::one(), S::zero())
    } else {
        let denom = (a * a + b * b).sqrt();
        (a / denom, b / denom)
    }
}

/// Solves the rotated triangle `R y = g` and forms `x_base + V y`.
/// `None` when the triangle has an exactly zero diagonal entry.
fn reconstruct<S: Scalar>(
    x_base: &[S],
    basis: &[DenseVector<S>],
    h_cols: &[Vec<S>],
    g: &[S],
    j: usize,
) -> Option<DenseVector<S>> {
    let mut y = vec![S::zero(); j + 1];
    for i in (0..=j).rev() {
        let mut acc = g[i];
        for l in i + 1..=j {
            acc -= h_cols[l][i] * y[l];
        }
        let diag = h_cols[i][i];
        if diag.primal_is_zero() {
            return None;
        }
        y[i] = acc / diag;
    }
    let mut x = x_base.to_vec();
    for i in 0..=j {
        axpy(y[i], &basis[i], &mut x);
    }
    Some(x)
}

/// Restarted GMRES(m). One iteration = one Arnoldi step (one operator
/// product), so restart cycles do not hide work from the budget.
pub fn gmres_restart<S: Scalar>(
    a: &CsrMatrix<S>,
    b: &[S],
    x0: &[S],
    cfg: &SolverConfig,
    precond: &dyn Preconditioner<S>,
    obs: &mut dyn IterationObserver<S::Real>,
) -> SolveOutcome<S> {
    check_system(a, b, x0);
    cfg.validate();
    let m = cfg.gmres_restart_length;
    let bnorm = norm2(b).primal();
    let threshold = cfg.tolerance_as::<S::Real>() * bnorm;

    let mut x: DenseVector<S> = x0.to_vec();
    let mut last_good = x.clone();
    let mut k = 0usize;
    let mut rep = Reporter::<S>::new(obs, cfg.record_every);

    let mut r = precond.apply(&vsub(b, &a.spmv(&x)));
    let mut beta = norm2(&r);
    let mut last_res = beta.primal();

    loop {
        // Cycle head: act on the (true) residual norm.
        if !beta.primal_is_finite() {
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
        if beta.primal() <= threshold {
            rep.finish(k, &x, beta.primal());
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::ToleranceMet,
                final_residual_norm: beta.primal(),
            };
        }
        if k >= cfg.max_iterations {
            rep.finish(k, &x, beta.primal());
            return SolveOutcome {
                solution: x,
                iterations_performed: k,
                termination: Termination::BudgetExhausted,
                final_residual_norm: beta.primal(),
            };
        }

        // One Arnoldi cycle of at most m steps.
        let mut basis: Vec<DenseVector<S>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|&ri| ri / beta).collect());
        let mut h_cols: Vec<Vec<S>> = Vec::with_capacity(m);
        let mut cs: Vec<S> = Vec::with_capacity(m);
        let mut sn: Vec<S> = Vec::with_capacity(m);
        let mut g: Vec<S> = vec![beta];
        let x_base = x.clone();

        for j in 0..m {
            let mut w = precond.apply(&a.spmv(&basis[j]));
            k += 1;

            let mut hcol = vec![S::zero(); j + 2];
            for i in 0..=j {
                hcol[i] = dot(&w, &basis[i]);
                axpy(-hcol[i], &basis[i], &mut w);
            }
            let hlast = norm2(&w);
            hcol[j + 1] = hlast;
            // Exactly zero subdiagonal: the Krylov space is invariant and
            // this cycle's least-squares solution solves the system (happy
            // breakdown — an exact solve, not an error).
            let happy = hlast.primal_is_zero();
            if !happy {
                basis.push(w.iter().map(|&wi| wi / hlast).collect());
            }

            for i in 0..j {
                let (hi, hi1) = (hcol[i], hcol[i + 1]);
                hcol[i] = cs[i] * hi + sn[i] * hi1;
                hcol[i + 1] = -sn[i] * hi + cs[i] * hi1;
            }
            let (c, s) = givens(hcol[j], hcol[j + 1]);
            hcol[j] = c * hcol[j] + s * hcol[j + 1];
            hcol[j + 1] = S::zero();
            cs.push(c);
            sn.push(s);
            g.push(S::zero());
            g[j + 1] = -s * g[j];
            g[j] = c * g[j];
            h_cols.push(hcol);
            let res_est = g[j + 1].abs().primal();

            let reconstructed = match reconstruct(&x_base, &basis, &h_cols, &g, j) {
                Some(xr) => xr,
                None => {
                    rep.finish(k, &last_good, last_res);
                    return SolveOutcome {
                        solution: last_good,
                        iterations_performed: k,
                        termination: Termination::Breakdown {
                            kind: BreakdownKind::HSingular,
                            iteration: k,
                        },
                        final_residual_norm: last_res,
                    };
                }
            };
            x = reconstructed;

            if !res_est.is_finite() || !all_primal_finite(&x) {
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
            last_res = res_est;
            rep.tick(k, &x, res_est);

            if res_est <= threshold {
                rep.finish(k, &x, res_est);
                return SolveOutcome {
                    solution: x,
                    iterations_performed: k,
                    termination: Termination::ToleranceMet,
                    final_residual_norm: res_est,
                };
            }
            if k == cfg.max_iterations {
                rep.finish(k, &x, res_est);
                return SolveOutcome {
                    solution: x,
                    iterations_performed: k,
                    termination: Termination::BudgetExhausted,
                    final_residual_norm: res_est,
                };
            }
            if happy {
                break;
            }
        }

        // Restart: recompute the true residual (not counted as an iteration;
        // the budget counts Arnoldi steps).
        r = precond.apply(&vsub(b, &a.spmv(&x)));
        beta = norm2(&r);
        last_res = beta.primal();
    }
}
