//! `adkrylov` — benchmark harness comparing differentiation strategies for
//! sparse Krylov solvers.
//!
//! Workflow: `fetch` downloads matrices into a local cache, `run` executes
//! the (matrix × solver × strategy) grid and writes per-iteration trace CSVs,
//! `profile` aggregates traces into data-profile CSVs, and `plot` turns
//! either CSV kind into a self-contained gnuplot script. `list` shows the
//! bundled matrix manifest.
//!
//! Exit codes: 0 success, 2 usage error, 3 fetch failure, 4 input parse
//! failure, 5 partial grid failure (some matrices failed, the rest ran).

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use adkrylov::{ErrorColumn, SolverKind, Strategy};
use adkrylov_cli::commands::{self, CliError, RunSpec};
use adkrylov_cli::fetch::{HttpTransport, DEFAULT_BASE_URL};

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn parse_column(s: &str) -> Result<ErrorColumn, String> {
    s.parse()
}

#[derive(Parser)]
#[command(
    name = "adkrylov",
    version,
    about = "Benchmark harness for differentiated sparse Krylov solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the bundled matrix manifest.
    List {
        /// Only show matrices with at most this many rows.
        #[arg(long)]
        max_dim: Option<usize>,
    },
    /// Download matrices into the local cache.
    Fetch {
        /// Matrix names (see `list`).
        names: Vec<String>,
        /// Fetch every manifest entry instead of naming them.
        #[arg(long)]
        all: bool,
        /// With --all: only matrices with at most this many rows.
        #[arg(long)]
        max_dim: Option<usize>,
        /// Cache directory (default: $ADKRYLOV_CACHE, then the user cache dir).
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Download host.
        #[arg(long, default_value = DEFAULT_BASE_URL)]
        base_url: String,
        /// Re-download even when cached, replacing the cached copy.
        #[arg(long)]
        force: bool,
    },
    /// Run the benchmark grid and write one trace CSV per cell.
    Run {
        /// Matrix names; when empty, every manifest entry within --max-dim.
        names: Vec<String>,
        /// Dimension cutoff for the default matrix selection.
        #[arg(long, default_value_t = 1000)]
        max_dim: usize,
        /// Comma-separated solvers to run.
        #[arg(
            long,
            value_delimiter = ',',
            value_parser = parse_solver,
            default_value = "gmres_restart,bicgstab,tfqmr"
        )]
        solvers: Vec<SolverKind>,
        /// Comma-separated differentiation strategies.
        #[arg(
            long,
            value_delimiter = ',',
            value_parser = parse_strategy,
            default_value = "original,lowlevel,highlevel"
        )]
        strategies: Vec<Strategy>,
        /// Iteration budget per solve.
        #[arg(long, default_value_t = 2000)]
        max_iterations: usize,
        /// Restart length m for GMRES(m).
        #[arg(long, default_value_t = 10)]
        restart: usize,
        /// Relative residual stopping tolerance (0 runs the full budget).
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        /// Record every k-th iteration in the traces.
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        /// Base seed for the manufactured solutions.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory the trace CSVs are written to.
        #[arg(long, default_value = "traces")]
        out: PathBuf,
        /// Worker threads for the grid (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Cache directory (default: $ADKRYLOV_CACHE, then the user cache dir).
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Download host for matrices missing from the cache.
        #[arg(long, default_value = DEFAULT_BASE_URL)]
        base_url: String,
    },
    /// Aggregate a directory of trace CSVs into a data-profile CSV.
    Profile {
        /// Directory holding `run` output.
        #[arg(long, default_value = "traces")]
        traces: PathBuf,
        /// Error threshold tau defining "solved".
        #[arg(long, default_value_t = 1e-2)]
        tau: f64,
        /// Which error column to profile: x or dx.
        #[arg(long, value_parser = parse_column, default_value = "x")]
        which: ErrorColumn,
        /// Output CSV path.
        #[arg(long, default_value = "profile.csv")]
        out: PathBuf,
    },
    /// Render a trace or profile CSV into a gnuplot script.
    Plot {
        /// Input CSV (either schema; detected by header).
        input: PathBuf,
        /// Output script path (default: input with a .gp extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List { max_dim } => {
            commands::cmd_list(max_dim);
            Ok(())
        }
        Command::Fetch {
            names,
            all,
            max_dim,
            cache,
            base_url,
            force,
        } => commands::cmd_fetch(
            &HttpTransport::new(),
            &names,
            all,
            max_dim,
            cache.as_deref(),
            &base_url,
            force,
        ),
        Command::Run {
            names,
            max_dim,
            solvers,
            strategies,
            max_iterations,
            restart,
            tolerance,
            record_every,
            seed,
            out,
            jobs,
            cache,
            base_url,
        } => {
            if let Some(jobs) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .map_err(|e| CliError::Other(format!("setting up thread pool: {e}")))?;
            }
            let spec = RunSpec {
                names,
                max_dim,
                solvers,
                strategies,
                max_iterations,
                gmres_restart_length: restart,
                residual_tolerance: tolerance,
                record_every,
                seed,
                out_dir: out,
                cache,
                base_url,
            };
            commands::cmd_run(&HttpTransport::new(), &spec)
        }
        Command::Profile {
            traces,
            tau,
            which,
            out,
        } => commands::cmd_profile(&traces, tau, which, &out),
        Command::Plot { input, out } => {
            let out = out.unwrap_or_else(|| input.with_extension("gp"));
            commands::cmd_plot(&input, &out)
        }
    }
}

fn main() {
    // Die quietly when a downstream pipe closes (`adkrylov list | head`)
    // instead of panicking on the failed write; Rust ignores SIGPIPE by
    // default.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
