//! `bfbench`: runs binfork algorithms over size and seed grids, optionally
//! checks each result against a sequential oracle, and prints one record
//! per run.

mod record;
mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use binfork::Mode;
use clap::{Parser, ValueEnum};

use record::{write_records, BenchRecord, Format};
use run::{run, Algo, Job, OpName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeName {
    Parallel,
    Instrumented,
    Simulate,
}

#[derive(Parser, Debug)]
#[command(name = "bfbench", version, about = "Benchmark and verify binary-forking algorithms")]
struct Cli {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Set operation (setops only).
    #[arg(long, value_enum, default_value = "union")]
    op: OpName,
    /// Comma-separated input sizes. For treecontract, the leaf count.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Comma-separated sizes of the second set (setops only).
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Number of range queries (rmq only).
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    /// A single seed. Takes precedence over --seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Run seeds 0..COUNT.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, value_enum, default_value = "instrumented")]
    mode: ModeName,
    /// Worker threads (parallel) or pseudo-processors (simulate).
    #[arg(long)]
    threads: Option<usize>,
    /// Weight-balance parameter for setops.
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    /// Check every result against its oracle.
    #[arg(long)]
    verify: bool,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

fn usage(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}

fn validate(cli: &Cli) -> Result<(), BenchError> {
    if !(cli.alpha > 0.0 && cli.alpha <= 1.0 - std::f64::consts::FRAC_1_SQRT_2) {
        return Err(usage(format!("--alpha must lie in (0, 1 - 1/sqrt 2], got {}", cli.alpha)));
    }
    if cli.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    if cli.seeds == Some(0) && cli.seed.is_none() {
        return Err(usage("--seeds must be at least 1"));
    }
    if cli.algo == Algo::Setops {
        if cli.m.is_empty() {
            return Err(usage("--algo setops needs --m"));
        }
    } else if !cli.m.is_empty() {
        return Err(usage("--m applies to setops only"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ BenchError::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Runs the whole grid. Returns whether every verification passed.
fn execute(cli: &Cli) -> Result<bool, BenchError> {
    validate(cli)?;
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()));
    if cli.mode == ModeName::Parallel {
        rayon_threads(threads);
    }
    let seeds: Vec<u64> = match (cli.seed, cli.seeds) {
        (Some(s), _) => vec![s],
        (None, Some(k)) => (0..k).collect(),
        (None, None) => vec![0],
    };
    let ms: Vec<Option<usize>> = if cli.algo == Algo::Setops { cli.m.iter().copied().map(Some).collect() } else { vec![None] };
    let mut records = Vec::new();
    let mut all_ok = true;
    for &n in &cli.n {
        for &m in &ms {
            for &seed in &seeds {
                let (mode, used_threads) = match cli.mode {
                    ModeName::Parallel => (Mode::Parallel, threads),
                    ModeName::Instrumented => (Mode::Instrumented, 1),
                    ModeName::Simulate => (Mode::Simulate { seed, procs: threads }, threads),
                };
                let job = Job {
                    algo: cli.algo,
                    n,
                    m: m.unwrap_or(0),
                    queries: cli.queries,
                    seed,
                    op: cli.op,
                    alpha: cli.alpha,
                    verify: cli.verify,
                };
                let out = run(&job, mode).map_err(BenchError::Usage)?;
                let algo = cli.algo.to_possible_value().expect("named").get_name().to_string();
                if let Some(d) = &out.divergence {
                    all_ok = false;
                    eprintln!("verification failed: algo {algo}, n {n}, seed {seed}: {d}");
                }
                records.push(BenchRecord {
                    algo,
                    n,
                    m,
                    seed,
                    mode: cli.mode.to_possible_value().expect("named").get_name().to_string(),
                    work: out.work,
                    span: out.span,
                    wall_ns: out.wall_ns,
                    verified: cli.verify.then_some(out.divergence.is_none()),
                    threads: used_threads,
                    op: (cli.algo == Algo::Setops).then(|| cli.op.to_possible_value().expect("named").get_name().to_string()),
                    comparisons: out.comparisons,
                });
            }
        }
    }
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    write_records(&mut *sink, cli.format, &records)?;
    Ok(all_ok)
}

/// Sizes the global pool used by parallel mode. Only the first call in a
/// process takes effect.
fn rayon_threads(threads: usize) {
    std::env::set_var("RAYON_NUM_THREADS", threads.to_string());
}
