//! Implementations of the CLI subcommands, kept free of argument parsing so
//! they can be driven directly from tests (with a stubbed transport where
//! the real one would hit the network).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use adkrylov::experiment::default_budgets;
use adkrylov::{
    data_profile, manufacture_problem, problem_seed, read_matrix_market_file, run_grid,
    ErrorColumn, SolverConfig, SolverKind, Strategy, TangentProblem,
};

use crate::csvio::{self, CsvError};
use crate::fetch::{fetch_matrix, resolve_cache_dir, FetchError, Transport};
use crate::manifest::{self, MatrixManifestEntry};
use crate::plot;

/// Process-level failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad invocation: empty selections, unknown names, missing inputs.
    #[error("{0}")]
    Usage(String),
    /// A download failed.
    #[error(transparent)]
    Fetch(#[from] FetchError),
    /// An input file (CSV or Matrix Market) did not parse.
    #[error("{0}")]
    Parse(String),
    /// Some grid cells could not run; the completed cells were still written.
    #[error("{failed} of {total} matrices failed; traces for the rest were written")]
    PartialFailure { failed: usize, total: usize },
    /// Anything else (I/O while writing outputs, mostly).
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// Stable exit code per failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Fetch(_) => 3,
            CliError::Parse(_) => 4,
            CliError::PartialFailure { .. } => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        CliError::Parse(e.to_string())
    }
}

fn write_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Other(format!("writing {}: {e}", path.display()))
}

/// Prints the bundled manifest as an aligned table.
pub fn cmd_list(max_dim: Option<usize>) {
    println!(
        "{:<14} {:<6} {:>7} {:>7} {:>9}",
        "name", "group", "rows", "cols", "nonzeros"
    );
    let mut count = 0;
    for e in manifest::filtered(max_dim.unwrap_or(usize::MAX)) {
        println!(
            "{:<14} {:<6} {:>7} {:>7} {:>9}",
            e.name, e.group, e.rows, e.cols, e.nonzeros
        );
        count += 1;
    }
    println!("{count} matrices");
}

/// Resolves a fetchable (group, name) pair. Names in the manifest use their
/// listed group; unknown names are tried in the default group so that a
/// matrix absent from the manifest still produces an honest fetch attempt
/// (and an honest fetch error).
fn group_of(name: &str) -> &'static str {
    manifest::find(name).map_or("Bai", |e| e.group)
}

/// Downloads matrices into the cache, reporting each path.
pub fn cmd_fetch(
    transport: &dyn Transport,
    names: &[String],
    all: bool,
    max_dim: Option<usize>,
    cache_flag: Option<&Path>,
    base_url: &str,
    force: bool,
) -> Result<(), CliError> {
    let selected: Vec<(String, String)> = if all {
        manifest::filtered(max_dim.unwrap_or(usize::MAX))
            .map(|e| (e.group.to_string(), e.name.to_string()))
            .collect()
    } else if names.is_empty() {
        return Err(CliError::Usage(
            "nothing to fetch: give matrix names or --all".to_string(),
        ));
    } else {
        names
            .iter()
            .map(|n| (group_of(n).to_string(), n.clone()))
            .collect()
    };

    let cache = resolve_cache_dir(cache_flag);
    for (group, name) in selected {
        let outcome = fetch_matrix(transport, base_url, &group, &name, &cache, force)?;
        if outcome.replaced_differing_file {
            eprintln!(
                "warning: {group}/{name} re-download differs from the cached copy; replaced it"
            );
        }
        let how = if outcome.from_cache {
            "cached"
        } else {
            "downloaded"
        };
        println!("{} ({how})", outcome.path.display());
    }
    Ok(())
}

/// Everything `run` needs, already parsed.
pub struct RunSpec {
    /// Explicit matrix names; empty means "the manifest filtered by max_dim".
    pub names: Vec<String>,
    /// Dimension cutoff used when `names` is empty.
    pub max_dim: usize,
    pub solvers: Vec<SolverKind>,
    pub strategies: Vec<Strategy>,
    pub max_iterations: usize,
    pub gmres_restart_length: usize,
    pub residual_tolerance: f64,
    pub record_every: usize,
    /// Base seed; each matrix derives its own stream from this and its name.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub cache: Option<PathBuf>,
    pub base_url: String,
}

/// Runs the benchmark grid and writes one trace CSV per (matrix, solver,
/// strategy) cell into the output directory.
///
/// Matrices that cannot be fetched or parsed are reported on stderr and
/// skipped; the rest of the grid still runs, and the command then exits with
/// the partial-failure code.
pub fn cmd_run(transport: &dyn Transport, spec: &RunSpec) -> Result<(), CliError> {
    let selected: Vec<&'static MatrixManifestEntry> = if spec.names.is_empty() {
        manifest::filtered(spec.max_dim).collect()
    } else {
        spec.names
            .iter()
            .map(|n| {
                manifest::find(n).ok_or_else(|| {
                    CliError::Usage(format!("unknown matrix `{n}` (see `adkrylov list`)"))
                })
            })
            .collect::<Result<_, _>>()?
    };
    if selected.is_empty() {
        return Err(CliError::Usage(format!(
            "empty matrix selection (no manifest entry has dimension <= {})",
            spec.max_dim
        )));
    }
    if spec.solvers.is_empty() || spec.strategies.is_empty() {
        return Err(CliError::Usage(
            "need at least one solver and one strategy".to_string(),
        ));
    }

    let cache = resolve_cache_dir(spec.cache.as_deref());
    let mut problems: Vec<(String, TangentProblem<f64>)> = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for entry in &selected {
        let fetched = match fetch_matrix(
            transport,
            &spec.base_url,
            entry.group,
            entry.name,
            &cache,
            false,
        ) {
            Ok(outcome) => outcome,
            Err(e) => {
                failures.push((entry.name.to_string(), e.to_string()));
                continue;
            }
        };
        let a = match read_matrix_market_file::<f64>(&fetched.path) {
            Ok(a) => a,
            Err(e) => {
                failures.push((entry.name.to_string(), e.to_string()));
                continue;
            }
        };
        if a.nrows() != a.ncols() {
            failures.push((
                entry.name.to_string(),
                format!("matrix is {}x{}, not square", a.nrows(), a.ncols()),
            ));
            continue;
        }
        let seed = problem_seed(spec.seed, entry.name);
        problems.push((entry.name.to_string(), manufacture_problem(a, None, seed)));
    }

    let cfg = SolverConfig {
        solver_kind: SolverKind::GmresRestart, // overridden per grid cell
        max_iterations: spec.max_iterations,
        gmres_restart_length: spec.gmres_restart_length,
        residual_tolerance: spec.residual_tolerance,
        record_every: spec.record_every,
    };
    let traces = run_grid(&problems, &spec.solvers, &spec.strategies, &cfg);

    fs::create_dir_all(&spec.out_dir).map_err(|e| write_err(&spec.out_dir, e))?;
    for trace in &traces {
        csvio::write_trace_csv(&spec.out_dir, trace).map_err(|e| write_err(&spec.out_dir, e))?;
    }
    println!(
        "wrote {} trace files to {}",
        traces.len(),
        spec.out_dir.display()
    );

    if failures.is_empty() {
        Ok(())
    } else {
        for (name, reason) in &failures {
            eprintln!("error: {name}: {reason}");
        }
        Err(CliError::PartialFailure {
            failed: failures.len(),
            total: selected.len(),
        })
    }
}

/// Aggregates a directory of trace CSVs into a data-profile CSV.
pub fn cmd_profile(
    trace_dir: &Path,
    threshold: f64,
    column: ErrorColumn,
    out: &Path,
) -> Result<(), CliError> {
    if threshold <= 0.0 {
        return Err(CliError::Usage("threshold must be positive".to_string()));
    }
    let traces = match csvio::read_trace_dir(trace_dir) {
        Ok(t) => t,
        Err(CsvError::Io { path, source }) => {
            return Err(CliError::Usage(format!(
                "no traces found at {path}: {source}"
            )))
        }
        Err(e @ CsvError::Malformed { .. }) => return Err(e.into()),
    };
    let relevant: Vec<_> = traces
        .iter()
        // The original strategy has no tangent column; it cannot appear in a
        // derivative profile.
        .filter(|t| column == ErrorColumn::X || t.strategy != Strategy::Original)
        .collect();
    if relevant.is_empty() {
        return Err(CliError::Usage(format!(
            "no traces found in {} (for the requested error column)",
            trace_dir.display()
        )));
    }

    let mut groups: BTreeMap<(&str, &str), Vec<&adkrylov::IterationTrace>> = BTreeMap::new();
    for t in relevant {
        groups
            .entry((t.solver.name(), t.strategy.name()))
            .or_default()
            .push(t);
    }

    let budgets = default_budgets();
    let mut curves = Vec::with_capacity(groups.len());
    for group in groups.values() {
        let curve = data_profile(group, column, threshold, &budgets)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        curves.push(curve);
    }

    fs::write(out, csvio::profile_csv_string(&curves)).map_err(|e| write_err(out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Renders a trace or profile CSV into a gnuplot script.
pub fn cmd_plot(input: &Path, out: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(input)
        .map_err(|e| CliError::Usage(format!("reading {}: {e}", input.display())))?;
    let image = out.with_extension("png");
    let image = image.file_name().map_or_else(
        || "plot.png".to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let rendered = plot::plot_csv(&text, &input.display().to_string(), &image)?;
    if let Some(warning) = rendered.warning {
        eprintln!("warning: {warning}");
    }
    fs::write(out, rendered.script).map_err(|e| write_err(out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}
