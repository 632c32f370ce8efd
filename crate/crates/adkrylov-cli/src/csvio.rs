//! CSV reading and writing for traces and data profiles.
//!
//! Both schemas are plain comma-separated text with `\n` line endings, a
//! header row, `.` decimal separators, and no quoting (no field the tool
//! emits can contain a comma). Floats are written in scientific notation
//! with shortest round-trip precision, absent values as empty fields, and
//! values outside the representable range as the literal `nonfinite`, so a
//! derivative blow-up stays visible in the file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use adkrylov::solvers::BreakdownKind;
use adkrylov::{
    DataProfileCurve, IterationTrace, SolverKind, Strategy, Termination, TraceRecord, TraceValue,
};

/// Header of per-iteration trace files.
pub const TRACE_HEADER: &str = "matrix,solver,strategy,iteration,err_x,err_dx,residual,termination";

/// Header of data-profile files.
pub const PROFILE_HEADER: &str = "solver,strategy,iteration,problems_solved,total_problems";

/// A malformed CSV input, pinned to a line.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn malformed(path: &str, line: usize, message: impl Into<String>) -> CsvError {
    CsvError::Malformed {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn push_value(out: &mut String, v: Option<TraceValue>) {
    match v {
        None => {}
        Some(TraceValue::Finite(x)) => {
            let _ = write!(out, "{x:e}");
        }
        Some(TraceValue::NonFinite) => out.push_str("nonfinite"),
    }
}

/// Renders one trace as CSV text (header + one row per recorded iteration).
pub fn trace_csv_string(trace: &IterationTrace) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for rec in &trace.records {
        let _ = write!(
            out,
            "{},{},{},{}",
            trace.matrix, trace.solver, trace.strategy, rec.iteration
        );
        out.push(',');
        push_value(&mut out, rec.err_x);
        out.push(',');
        push_value(&mut out, rec.err_dx);
        out.push(',');
        push_value(&mut out, rec.residual);
        let _ = write!(out, ",{}", trace.termination);
        out.push('\n');
    }
    out
}

/// Canonical file name for a trace: `<matrix>.<solver>.<strategy>.csv`.
pub fn trace_file_name(trace: &IterationTrace) -> String {
    format!("{}.{}.{}.csv", trace.matrix, trace.solver, trace.strategy)
}

/// Writes a trace into `dir` under its canonical name.
pub fn write_trace_csv(dir: &Path, trace: &IterationTrace) -> Result<PathBuf, std::io::Error> {
    let path = dir.join(trace_file_name(trace));
    fs::write(&path, trace_csv_string(trace))?;
    Ok(path)
}

fn parse_trace_value(field: &str, path: &str, line: usize) -> Result<Option<TraceValue>, CsvError> {
    match field {
        "" => Ok(None),
        "nonfinite" => Ok(Some(TraceValue::NonFinite)),
        s => {
            let v: f64 = s
                .parse()
                .map_err(|_| malformed(path, line, format!("bad float `{s}`")))?;
            Ok(Some(TraceValue::from_value(v)))
        }
    }
}

fn parse_termination(field: &str, path: &str, line: usize) -> Result<Termination, CsvError> {
    match field {
        "tolerance_met" => Ok(Termination::ToleranceMet),
        "budget_exhausted" => Ok(Termination::BudgetExhausted),
        s => {
            let inner = s
                .strip_prefix("breakdown(")
                .and_then(|rest| rest.strip_suffix(')'))
                .ok_or_else(|| malformed(path, line, format!("bad termination `{s}`")))?;
            let (kind, iter) = inner
                .split_once('@')
                .ok_or_else(|| malformed(path, line, format!("bad termination `{s}`")))?;
            let kind = match kind {
                "rho_zero" => BreakdownKind::RhoZero,
                "omega_zero" => BreakdownKind::OmegaZero,
                "h_singular" => BreakdownKind::HSingular,
                "nonfinite_value" => BreakdownKind::NonFiniteValue,
                other => {
                    return Err(malformed(
                        path,
                        line,
                        format!("bad breakdown kind `{other}`"),
                    ))
                }
            };
            let iteration = iter
                .parse()
                .map_err(|_| malformed(path, line, format!("bad breakdown iteration `{iter}`")))?;
            Ok(Termination::Breakdown { kind, iteration })
        }
    }
}

/// Parses one trace file back into an [`IterationTrace`].
///
/// The CSV schema carries only the combined termination, so the primal-stage
/// termination of two-stage traces comes back as `None`; everything else
/// round-trips exactly.
pub fn parse_trace_csv(text: &str, path: &str) -> Result<IterationTrace, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(path, 1, "empty file"))?;
    if header != TRACE_HEADER {
        return Err(malformed(
            path,
            1,
            format!("expected header `{TRACE_HEADER}`, found `{header}`"),
        ));
    }

    let mut trace: Option<IterationTrace> = None;
    for (idx, row) in lines {
        let line = idx + 1;
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(
                path,
                line,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        let solver: SolverKind = fields[1]
            .parse()
            .map_err(|e: String| malformed(path, line, e))?;
        let strategy: Strategy = fields[2]
            .parse()
            .map_err(|e: String| malformed(path, line, e))?;
        let iteration: usize = fields[3]
            .parse()
            .map_err(|_| malformed(path, line, format!("bad iteration `{}`", fields[3])))?;
        let record = TraceRecord {
            iteration,
            err_x: parse_trace_value(fields[4], path, line)?,
            err_dx: parse_trace_value(fields[5], path, line)?,
            residual: parse_trace_value(fields[6], path, line)?,
        };
        let termination = parse_termination(fields[7], path, line)?;

        let trace = trace.get_or_insert_with(|| IterationTrace {
            matrix: fields[0].to_string(),
            solver,
            strategy,
            records: Vec::new(),
            termination,
            x_termination: None,
        });
        if trace.matrix != fields[0] || trace.solver != solver || trace.strategy != strategy {
            return Err(malformed(
                path,
                line,
                "file mixes rows from different traces",
            ));
        }
        trace.termination = termination;
        trace.records.push(record);
    }

    trace.ok_or_else(|| malformed(path, 1, "trace file has a header but no rows"))
}

/// Reads every `.csv` in `dir` as a trace, in file-name order.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<IterationTrace>, CsvError> {
    let io_err = |source| CsvError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    paths.sort();

    let mut traces = Vec::with_capacity(paths.len());
    for path in paths {
        let label = path.display().to_string();
        let text = fs::read_to_string(&path).map_err(|source| CsvError::Io {
            path: label.clone(),
            source,
        })?;
        traces.push(parse_trace_csv(&text, &label)?);
    }
    Ok(traces)
}

/// Renders data-profile curves as CSV: one row per (curve, budget point).
pub fn profile_csv_string(curves: &[DataProfileCurve]) -> String {
    let mut out = String::new();
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for curve in curves {
        for point in &curve.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                curve.solver, curve.strategy, point.budget, point.solved, curve.total_problems
            );
        }
    }
    out
}

/// One (solver, strategy) series read back from a profile CSV. Only what
/// plotting needs: names, points, and the problem total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSeries {
    pub solver: String,
    pub strategy: String,
    /// `(iteration budget, problems solved)` in file order.
    pub points: Vec<(usize, usize)>,
    pub total_problems: usize,
}

/// Parses a profile CSV into its series, preserving encounter order.
pub fn parse_profile_csv(text: &str, path: &str) -> Result<Vec<ProfileSeries>, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(path, 1, "empty file"))?;
    if header != PROFILE_HEADER {
        return Err(malformed(
            path,
            1,
            format!("expected header `{PROFILE_HEADER}`, found `{header}`"),
        ));
    }

    let mut series: Vec<ProfileSeries> = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(
                path,
                line,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let parse_count = |s: &str| -> Result<usize, CsvError> {
            s.parse()
                .map_err(|_| malformed(path, line, format!("bad count `{s}`")))
        };
        let budget = parse_count(fields[2])?;
        let solved = parse_count(fields[3])?;
        let total = parse_count(fields[4])?;

        let matches_last = series
            .last()
            .is_some_and(|s| s.solver == fields[0] && s.strategy == fields[1]);
        if !matches_last {
            series.push(ProfileSeries {
                solver: fields[0].to_string(),
                strategy: fields[1].to_string(),
                points: Vec::new(),
                total_problems: total,
            });
        }
        let current = series.last_mut().expect("just ensured non-empty");
        if current.total_problems != total {
            return Err(malformed(
                path,
                line,
                "total_problems changes within one series",
            ));
        }
        current.points.push((budget, solved));
    }
    Ok(series)
}
