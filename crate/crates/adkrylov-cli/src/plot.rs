//! Gnuplot script generation for trace and profile CSVs.
//!
//! The emitted scripts are self-contained: all data rides along in inline
//! datablocks, so a script keeps working after the CSV it came from moves or
//! changes. Trace plots show the recorded L2 errors (and residual) against
//! iterations on a log axis with non-finite entries left out; profile plots
//! show problems-solved-by-budget step curves, one per (solver, strategy).

use std::fmt::Write as _;

use adkrylov::{IterationTrace, TraceValue};

use crate::csvio::{self, CsvError, ProfileSeries, PROFILE_HEADER, TRACE_HEADER};

/// A generated script plus an optional warning the caller should surface on
/// stderr (the script itself is still valid gnuplot).
#[derive(Debug)]
pub struct PlotOutput {
    pub script: String,
    pub warning: Option<String>,
}

/// Builds a plot script from CSV text, dispatching on the header row.
/// `source` labels the input in titles and errors; `image` is the output
/// file the script renders to.
pub fn plot_csv(text: &str, source: &str, image: &str) -> Result<PlotOutput, CsvError> {
    let header = text.lines().next().unwrap_or("");
    if header == PROFILE_HEADER {
        let series = csvio::parse_profile_csv(text, source)?;
        Ok(plot_profile(&series, source, image))
    } else if header == TRACE_HEADER {
        let has_rows = text.lines().skip(1).any(|l| !l.is_empty());
        if !has_rows {
            return Ok(empty_plot(source, image));
        }
        let trace = csvio::parse_trace_csv(text, source)?;
        Ok(plot_trace(&trace, source, image))
    } else {
        Err(CsvError::Malformed {
            path: source.to_string(),
            line: 1,
            message: format!("unrecognized header `{header}` (expected a trace or profile CSV)"),
        })
    }
}

fn preamble(out: &mut String, source: &str, image: &str) {
    let _ = writeln!(out, "# generated by adkrylov plot from {source}");
    let _ = writeln!(out, "set terminal pngcairo size 960,640");
    let _ = writeln!(out, "set output '{image}'");
    let _ = writeln!(out, "set xlabel 'iterations'");
    let _ = writeln!(out, "set key outside right top");
    let _ = writeln!(out, "set grid");
}

fn empty_plot(source: &str, image: &str) -> PlotOutput {
    let mut script = String::new();
    preamble(&mut script, source, image);
    script.push_str("# input had a header but no data rows\n");
    script.push_str("set title 'no data'\n");
    script.push_str("plot [0:1][0:1] NaN notitle\n");
    PlotOutput {
        script,
        warning: Some(format!("{source}: no data rows, emitting an empty plot")),
    }
}

/// One named column pulled out of a trace, with non-finite and absent
/// entries already dropped.
struct Series {
    title: String,
    points: Vec<(usize, f64)>,
}

fn collect(
    trace: &IterationTrace,
    title: &str,
    get: impl Fn(&adkrylov::TraceRecord) -> Option<TraceValue>,
) -> Series {
    let points = trace
        .records
        .iter()
        .filter_map(|rec| {
            let v = get(rec)?.finite()?;
            Some((rec.iteration, v))
        })
        .collect();
    Series {
        title: title.to_string(),
        points,
    }
}

fn plot_trace(trace: &IterationTrace, source: &str, image: &str) -> PlotOutput {
    let mut series = vec![collect(trace, "err_x", |r| r.err_x)];
    series.push(collect(trace, "err_dx", |r| r.err_dx));
    series.push(collect(trace, "residual", |r| r.residual));
    series.retain(|s| !s.points.is_empty());

    if series.is_empty() {
        // All entries were non-finite or absent; nothing plottable remains.
        return empty_plot(source, image);
    }

    let mut script = String::new();
    preamble(&mut script, source, image);
    let _ = writeln!(
        script,
        "set title '{} / {} / {}'",
        trace.matrix, trace.solver, trace.strategy
    );
    script.push_str("set ylabel 'L2 error'\n");
    script.push_str("set logscale y\n");
    script.push_str("set format y '1e%T'\n");
    for (i, s) in series.iter().enumerate() {
        let _ = writeln!(script, "$data{i} << EOD");
        for (iter, v) in &s.points {
            let _ = writeln!(script, "{iter} {v:e}");
        }
        script.push_str("EOD\n");
    }
    script.push_str("plot ");
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            script.push_str(", ");
        }
        let _ = write!(script, "$data{i} using 1:2 with lines title '{}'", s.title);
    }
    script.push('\n');
    PlotOutput {
        script,
        warning: None,
    }
}

fn plot_profile(series: &[ProfileSeries], source: &str, image: &str) -> PlotOutput {
    if series.is_empty() {
        return empty_plot(source, image);
    }
    let total = series.iter().map(|s| s.total_problems).max().unwrap_or(0);

    let mut script = String::new();
    preamble(&mut script, source, image);
    let _ = writeln!(script, "set title 'problems solved out of {total}'");
    script.push_str("set ylabel 'problems solved'\n");
    let _ = writeln!(script, "set yrange [0:{}]", total + 1);
    for (i, s) in series.iter().enumerate() {
        let _ = writeln!(script, "$data{i} << EOD");
        for (budget, solved) in &s.points {
            let _ = writeln!(script, "{budget} {solved}");
        }
        script.push_str("EOD\n");
    }
    script.push_str("plot ");
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            script.push_str(", ");
        }
        let _ = write!(
            script,
            "$data{i} using 1:2 with steps title '{} {}'",
            s.solver, s.strategy
        );
    }
    script.push('\n');
    PlotOutput {
        script,
        warning: None,
    }
}
