//! Error traces, experiment grids, and data profiles.
//!
//! Everything here works on `f64` problems: an experiment runs one
//! (problem, solver, strategy) combination while recording per-iteration
//! relative errors against the problem's known references, and a data
//! profile aggregates many traces into "how many problems reached error
//! `tau` within `n` iterations" curves.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::autodiff::{solve_highlevel, solve_lowlevel, solve_original, TangentProblem};
use crate::solvers::{IterateView, SolverConfig, SolverKind, Termination};

/// How a tangent problem is pushed through a solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Plain solve of `A x = b`; no derivative is computed.
    Original,
    /// Dual-number solve: derivatives ride along through every operation.
    Lowlevel,
    /// Two-stage solve: `A x = b`, then `A y = db - dA x`.
    Highlevel,
}

impl Strategy {
    /// All strategies, in canonical order.
    pub const ALL: [Strategy; 3] = [Strategy::Original, Strategy::Lowlevel, Strategy::Highlevel];

    /// The stable lowercase name used in file formats and on the command
    /// line.
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Original => "original",
            Strategy::Lowlevel => "lowlevel",
            Strategy::Highlevel => "highlevel",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Strategy::Original),
            "lowlevel" => Ok(Strategy::Lowlevel),
            "highlevel" => Ok(Strategy::Highlevel),
            other => Err(format!(
                "unknown strategy `{other}` (expected original, lowlevel, or highlevel)"
            )),
        }
    }
}

/// A recorded scalar that may have left the representable range. Traces keep
/// such entries (as markers) instead of dropping the row, so a derivative
/// blow-up remains visible in the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceValue {
    /// An ordinary finite value.
    Finite(f64),
    /// Overflowed or undefined (infinity or NaN at recording time).
    NonFinite,
}

impl TraceValue {
    /// Classifies a raw value.
    pub fn from_value(v: f64) -> Self {
        if v.is_finite() {
            TraceValue::Finite(v)
        } else {
            TraceValue::NonFinite
        }
    }

    /// The value if finite.
    pub fn finite(self) -> Option<f64> {
        match self {
            TraceValue::Finite(v) => Some(v),
            TraceValue::NonFinite => None,
        }
    }
}

impl fmt::Display for TraceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceValue::Finite(v) => write!(f, "{v:e}"),
            TraceValue::NonFinite => f.write_str("nonfinite"),
        }
    }
}

/// One recorded iteration. Absent entries (`None`) mean the quantity does
/// not exist for this strategy or this iteration — e.g. the original
/// strategy has no tangent error, and in the two-stage strategy the two
/// stages may run for different iteration counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Iteration index the record belongs to (1-based, matching the solver
    /// counters).
    pub iteration: usize,
    /// Solution error `‖x_k − x_ref‖₂`.
    pub err_x: Option<TraceValue>,
    /// Tangent error `‖dx_k − dx_ref‖₂`.
    pub err_dx: Option<TraceValue>,
    /// Residual norm as reported by the solver that produced the iterate.
    pub residual: Option<TraceValue>,
}

/// The full per-iteration history of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// Problem name (typically the matrix name).
    pub matrix: String,
    /// Solver that ran.
    pub solver: SolverKind,
    /// Differentiation strategy.
    pub strategy: Strategy,
    /// Recorded iterations, ascending.
    pub records: Vec<TraceRecord>,
    /// How the run ended. For the two-stage strategy this is the tangent
    /// stage's termination (the stage the strategy exists to produce); the
    /// primal stage's termination is kept in [`IterationTrace::x_termination`].
    pub termination: Termination,
    /// Termination of the primal stage, for the two-stage strategy only.
    pub x_termination: Option<Termination>,
}

/// Euclidean error `‖v − reference‖₂`. Non-finite entries in `v` propagate
/// to a non-finite trace value.
fn l2_error(v: &[f64], reference: &[f64]) -> TraceValue {
    debug_assert_eq!(v.len(), reference.len());
    let mut diff2 = 0.0f64;
    for (&a, &r) in v.iter().zip(reference) {
        diff2 += (a - r) * (a - r);
    }
    TraceValue::from_value(diff2.sqrt())
}

/// Runs one (problem, solver, strategy) combination and records its trace.
/// Recording frequency follows `cfg.record_every`; the solver kind in `cfg`
/// is overridden by `solver`.
pub fn run_instance(
    matrix: &str,
    problem: &TangentProblem<f64>,
    solver: SolverKind,
    strategy: Strategy,
    cfg: &SolverConfig,
) -> IterationTrace {
    let mut cfg = cfg.clone();
    cfg.solver_kind = solver;

    let (records, termination, x_termination) = match strategy {
        Strategy::Original => {
            let mut records = Vec::new();
            let outcome = {
                let mut obs = |k: usize, view: IterateView<'_, f64>, res: f64| {
                    records.push(TraceRecord {
                        iteration: k,
                        err_x: Some(l2_error(view.primal, &problem.x_ref)),
                        err_dx: None,
                        residual: Some(TraceValue::from_value(res)),
                    });
                };
                solve_original(problem, &cfg, &mut obs)
            };
            (records, outcome.termination, None)
        }
        Strategy::Lowlevel => {
            let mut records = Vec::new();
            let result = {
                let mut obs = |k: usize, view: IterateView<'_, f64>, res: f64| {
                    let tangent = view.tangent.expect("dual solves report tangents");
                    records.push(TraceRecord {
                        iteration: k,
                        err_x: Some(l2_error(view.primal, &problem.x_ref)),
                        err_dx: Some(l2_error(tangent, &problem.dx_ref)),
                        residual: Some(TraceValue::from_value(res)),
                    });
                };
                solve_lowlevel(problem, &cfg, &mut obs)
            };
            (records, result.outcome.termination, None)
        }
        Strategy::Highlevel => {
            let mut x_rows: Vec<(usize, TraceValue, TraceValue)> = Vec::new();
            let mut dx_rows: Vec<(usize, TraceValue)> = Vec::new();
            let result = {
                let mut obs_x = |k: usize, view: IterateView<'_, f64>, res: f64| {
                    x_rows.push((
                        k,
                        l2_error(view.primal, &problem.x_ref),
                        TraceValue::from_value(res),
                    ));
                };
                let mut obs_dx = |k: usize, view: IterateView<'_, f64>, _res: f64| {
                    dx_rows.push((k, l2_error(view.primal, &problem.dx_ref)));
                };
                solve_highlevel(problem, &cfg, &mut obs_x, &mut obs_dx)
            };
            // The two stages may record different iteration sets; merge on
            // the iteration index.
            let mut merged: BTreeMap<usize, TraceRecord> = BTreeMap::new();
            for (k, err_x, residual) in x_rows {
                merged.insert(
                    k,
                    TraceRecord {
                        iteration: k,
                        err_x: Some(err_x),
                        err_dx: None,
                        residual: Some(residual),
                    },
                );
            }
            for (k, err_dx) in dx_rows {
                merged
                    .entry(k)
                    .and_modify(|rec| rec.err_dx = Some(err_dx))
                    .or_insert(TraceRecord {
                        iteration: k,
                        err_x: None,
                        err_dx: Some(err_dx),
                        residual: None,
                    });
            }
            (
                merged.into_values().collect(),
                result.tangent_outcome.termination,
                Some(result.primal_outcome.termination),
            )
        }
    };

    IterationTrace {
        matrix: matrix.to_string(),
        solver,
        strategy,
        records,
        termination,
        x_termination,
    }
}

/// Runs the full cartesian grid of problems x solvers x strategies in
/// parallel. The output order is deterministic — sorted by (matrix, solver,
/// strategy) — regardless of scheduling.
pub fn run_grid(
    problems: &[(String, TangentProblem<f64>)],
    solvers: &[SolverKind],
    strategies: &[Strategy],
    cfg: &SolverConfig,
) -> Vec<IterationTrace> {
    let mut combos = Vec::new();
    for (name, problem) in problems {
        for &solver in solvers {
            for &strategy in strategies {
                combos.push((name.as_str(), problem, solver, strategy));
            }
        }
    }
    let mut traces: Vec<IterationTrace> = combos
        .into_par_iter()
        .map(|(name, problem, solver, strategy)| run_instance(name, problem, solver, strategy, cfg))
        .collect();
    traces.sort_by(|a, b| {
        (a.matrix.as_str(), a.solver.name(), a.strategy.name()).cmp(&(
            b.matrix.as_str(),
            b.solver.name(),
            b.strategy.name(),
        ))
    });
    traces
}

/// Which error column a profile (or crossing query) reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorColumn {
    /// Solution error `err_x`.
    X,
    /// Tangent error `err_dx`.
    Dx,
}

impl fmt::Display for ErrorColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorColumn::X => "x",
            ErrorColumn::Dx => "dx",
        })
    }
}

impl FromStr for ErrorColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(ErrorColumn::X),
            "dx" => Ok(ErrorColumn::Dx),
            other => Err(format!("unknown error column `{other}` (expected x or dx)")),
        }
    }
}

/// First recorded iteration whose error in `column` is finite and strictly
/// below `threshold`; `None` if the trace never gets there. Non-finite
/// entries never count as solved.
pub fn first_solved_iteration(
    trace: &IterationTrace,
    column: ErrorColumn,
    threshold: f64,
) -> Option<usize> {
    trace.records.iter().find_map(|rec| {
        let value = match column {
            ErrorColumn::X => rec.err_x,
            ErrorColumn::Dx => rec.err_dx,
        }?;
        match value.finite() {
            Some(v) if v < threshold => Some(rec.iteration),
            _ => None,
        }
    })
}

/// Ways a data profile request can be malformed.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProfileError {
    /// No traces were supplied.
    #[error("data profiles need at least one trace")]
    Empty,
    /// Traces do not all share one solver and strategy.
    #[error("traces mix solver/strategy combinations: {0} vs {1}")]
    Mixed(String, String),
    /// The tangent column was requested for a strategy that never records it.
    #[error("the original strategy records no tangent error to profile")]
    NoTangentColumn,
    /// The budget list is empty or not strictly increasing.
    #[error("iteration budgets must be nonempty and strictly increasing")]
    BadBudgets,
}

/// One point of a data profile curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfilePoint {
    /// Iteration budget.
    pub budget: usize,
    /// Number of problems solved within that budget.
    pub solved: usize,
}

/// A data profile: for each iteration budget, how many of the traced
/// problems reached the error threshold by then.
#[derive(Debug, Clone, PartialEq)]
pub struct DataProfileCurve {
    /// Solver shared by all aggregated traces.
    pub solver: SolverKind,
    /// Strategy shared by all aggregated traces.
    pub strategy: Strategy,
    /// Error threshold the profile counts crossings of.
    pub threshold: f64,
    /// Curve points, one per requested budget, in budget order.
    pub points: Vec<ProfilePoint>,
    /// Total number of traces aggregated.
    pub total_problems: usize,
}

/// Aggregates traces of one (solver, strategy) combination into a data
/// profile over the given iteration budgets.
pub fn data_profile(
    traces: &[&IterationTrace],
    column: ErrorColumn,
    threshold: f64,
    budgets: &[usize],
) -> Result<DataProfileCurve, ProfileError> {
    let first = traces.first().ok_or(ProfileError::Empty)?;
    for t in traces {
        if t.solver != first.solver || t.strategy != first.strategy {
            return Err(ProfileError::Mixed(
                format!("{}/{}", first.solver, first.strategy),
                format!("{}/{}", t.solver, t.strategy),
            ));
        }
    }
    if column == ErrorColumn::Dx && first.strategy == Strategy::Original {
        return Err(ProfileError::NoTangentColumn);
    }
    if budgets.is_empty() || !budgets.windows(2).all(|w| w[0] < w[1]) {
        return Err(ProfileError::BadBudgets);
    }

    let crossings: Vec<Option<usize>> = traces
        .iter()
        .map(|t| first_solved_iteration(t, column, threshold))
        .collect();
    let points = budgets
        .iter()
        .map(|&budget| ProfilePoint {
            budget,
            solved: crossings
                .iter()
                .filter(|c| matches!(c, Some(k) if *k <= budget))
                .count(),
        })
        .collect();

    Ok(DataProfileCurve {
        solver: first.solver,
        strategy: first.strategy,
        threshold,
        points,
        total_problems: traces.len(),
    })
}

/// The standard 1..=2000 budget grid (every iteration the default solver
/// budget allows).
pub fn default_budgets() -> Vec<usize> {
    (1..=2000).collect()
}

/// The error thresholds profiles are usually reported at.
pub const DEFAULT_THRESHOLDS: [f64; 2] = [1e-2, 1e-4];
