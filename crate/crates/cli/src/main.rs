//! `rptcard`: estimate or evaluate result cardinalities of acyclic BGPs.
//!
//! Exit status is 0 on success, 1 for unreadable input, invalid
//! configuration or an empty query set, and 2 when any query fails to parse
//! or estimate (the remaining queries are still reported).

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rptcard_core::estimate::{EvaluationReport, EvaluationRow};
use rptcard_core::{
    estimate, evaluate, execute_bgp, load_ntriples, parse_query, BasicGraphPattern,
    CardinalityCache, Estimate, Graph, DEFAULT_CACHE_SIZE, DEFAULT_EVICTION_RATE,
};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "rptcard", version, about = "Cardinality estimation for acyclic RDF basic graph patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate each query and print one report per query.
    Estimate(RunConfig),
    /// Estimate each query, run it exactly, and correlate the two.
    Evaluate(RunConfig),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct RunConfig {
    /// N-Triples file, or `-` for stdin.
    #[arg(long)]
    data: PathBuf,
    /// Query file; repeat for several.
    #[arg(long = "query")]
    queries: Vec<PathBuf>,
    /// Directory whose `*.rq` files are run in name order.
    #[arg(long)]
    queries_dir: Option<PathBuf>,
    #[arg(long, env = "PRESTO_CACHE_SIZE", default_value_t = DEFAULT_CACHE_SIZE)]
    cache_size: usize,
    /// Fraction of the cache dropped when it is full, in (0, 1].
    #[arg(long, default_value_t = DEFAULT_EVICTION_RATE)]
    eviction_rate: f64,
    /// Also run each query exactly and report `true_card`.
    #[arg(long)]
    with_truth: bool,
    /// Include the full probability distribution.
    #[arg(long)]
    with_distribution: bool,
    /// Leave out the `timings` object so output is byte-for-byte reproducible.
    #[arg(long)]
    no_timings: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// A failure that ends the run with status 1.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn load_graph(path: &Path) -> Result<Graph, Fatal> {
    let graph = if path.as_os_str() == "-" {
        load_ntriples(io::stdin().lock())
    } else {
        let file = File::open(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
        load_ntriples(BufReader::new(file))
    };
    graph.map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn query_paths(config: &RunConfig) -> Result<Vec<PathBuf>, Fatal> {
    let mut paths = config.queries.clone();
    if let Some(dir) = &config.queries_dir {
        let mut found = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| Fatal(format!("{}: {e}", dir.display())))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "rq") {
                found.push(path);
            }
        }
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(Fatal("no queries given".into()));
    }
    Ok(paths)
}

fn query_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

type Parsed = (String, rptcard_core::Result<BasicGraphPattern>);

fn read_queries(paths: &[PathBuf]) -> Result<Vec<Parsed>, Fatal> {
    paths
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
            Ok((query_id(path), parse_query(&text)))
        })
        .collect()
}

fn prepare(config: &RunConfig) -> Result<(Graph, Vec<Parsed>, CardinalityCache), Fatal> {
    if config.cache_size < 1 {
        return Err(Fatal("cache size must be at least 1".into()));
    }
    let cache = CardinalityCache::new(config.cache_size, config.eviction_rate)?;
    let paths = query_paths(config)?;
    let graph = load_graph(&config.data)?;
    let queries = read_queries(&paths)?;
    Ok((graph, queries, cache))
}

fn strip_timings(mut v: Value, keep: bool) -> Value {
    if !keep {
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
    }
    v
}

fn columns_text(est: &Estimate) -> String {
    est.columns
        .iter()
        .map(|c| format!("{}={}", c.label, c.count))
        .collect::<Vec<_>>()
        .join(" ")
}

fn mean_text(est: &Estimate) -> String {
    let mean = &est.mean;
    if mean.is_integer() {
        mean.numer().to_string()
    } else {
        format!("{:.3}", rptcard_core::overlap::rational_f64(mean))
    }
}

fn run_estimate(config: &RunConfig, out: &mut impl Write) -> Result<bool, Fatal> {
    let (graph, queries, cache) = prepare(config)?;
    let mut all_ok = true;
    let mut table = String::new();
    if matches!(config.format, Format::Table) {
        let truth = if config.with_truth { "\ttrue" } else { "" };
        writeln!(table, "query\tpoint\texact\tmean\tm{truth}\tcolumns")?;
    }
    for (id, parsed) in &queries {
        let result = parsed
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|bgp| estimate(&graph, bgp, &cache).map(|e| (bgp, e)));
        match result {
            Err(e) => {
                all_ok = false;
                eprintln!("{id}: {e}");
                match config.format {
                    Format::Json => {
                        let v = serde_json::json!({"query_id": id, "error": e.to_string()});
                        writeln!(out, "{v}")?;
                    }
                    Format::Table => writeln!(table, "{id}\terror: {e}")?,
                }
            }
            Ok((bgp, est)) => {
                let truth = config.with_truth.then(|| execute_bgp(&graph, bgp));
                match config.format {
                    Format::Json => {
                        let v = est.to_json(id, config.with_distribution, truth.as_ref());
                        writeln!(out, "{}", strip_timings(v, !config.no_timings))?;
                    }
                    Format::Table => {
                        let m = est.m.as_ref().map_or("-".into(), ToString::to_string);
                        let truth = truth.map_or(String::new(), |t| format!("\t{t}"));
                        writeln!(
                            table,
                            "{id}\t{}\t{}\t{}\t{m}{truth}\t{}",
                            est.point,
                            est.exact,
                            mean_text(&est),
                            columns_text(&est)
                        )?;
                        if config.with_distribution {
                            if let Some(d) = &est.distribution {
                                writeln!(table, "  {d}")?;
                            }
                        }
                    }
                }
            }
        }
    }
    out.write_all(table.as_bytes())?;
    Ok(all_ok)
}

fn evaluation_table(report: &EvaluationReport) -> String {
    let mut s = String::from("query\ttrue\testimate\texact\tmean\n");
    for row in &report.rows {
        match row {
            EvaluationRow::Done { query_id, estimate, truth, .. } => {
                let _ = writeln!(
                    s,
                    "{query_id}\t{truth}\t{}\t{}\t{}",
                    estimate.point,
                    estimate.exact,
                    mean_text(estimate)
                );
            }
            EvaluationRow::Skipped { query_id, reason } => {
                let _ = writeln!(s, "{query_id}\tskipped: {reason}");
            }
        }
    }
    let pearson = report
        .correlation
        .pearson
        .map_or("undefined".into(), |r| format!("{r:.4}"));
    let flag = report.correlation.flag.map_or(String::new(), |f| format!(" ({f})"));
    let _ = writeln!(
        s,
        "n={} mean_true={:.4} mean_estimate={:.4} pearson={pearson}{flag}",
        report.n, report.mean_true, report.mean_estimate
    );
    s
}

fn run_evaluate(config: &RunConfig, out: &mut impl Write) -> Result<bool, Fatal> {
    let (graph, queries, cache) = prepare(config)?;
    let report = evaluate(&graph, &queries, &cache);
    for row in &report.rows {
        if let EvaluationRow::Skipped { query_id, reason } = row {
            eprintln!("{query_id}: {reason}");
        }
    }
    match config.format {
        Format::Json => {
            let mut v = report.to_json(config.with_distribution);
            if config.no_timings {
                for row in v["queries"].as_array_mut().into_iter().flatten() {
                    if let Some(obj) = row.as_object_mut() {
                        obj.remove("timings");
                    }
                }
            }
            writeln!(out, "{v}")?;
        }
        Format::Table => out.write_all(evaluation_table(&report).as_bytes())?,
    }
    Ok(report.skipped() == 0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Estimate(config) => run_estimate(config, &mut out),
        Command::Evaluate(config) => run_evaluate(config, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Fatal(message)) => {
            eprintln!("rptcard: {message}");
            ExitCode::from(1)
        }
    }
}
