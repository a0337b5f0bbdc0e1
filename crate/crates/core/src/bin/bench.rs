use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use epishmem::bench::{
    emit_report, fit_suite, run_suite, BenchConfig, BenchError, ReportFormat, Routine,
};
use epishmem::RuntimeConfig;

#[derive(Parser)]
#[command(
    name = "bench",
    about = "OpenSHMEM microbenchmarks on the simulated mesh"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark suite and print samples plus alpha-beta fits.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Comma-separated routines, or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    /// PEs taking part (default: the whole mesh).
    #[arg(long)]
    pes: Option<usize>,
    #[arg(long, default_value_t = 4)]
    rows: usize,
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Message sizes in bytes, `MIN:MAX`, doubling.
    #[arg(long, default_value = "8:8192")]
    sizes: String,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Calibration file in `key = value` form.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    wand_barrier: bool,
    #[arg(long)]
    ipi_get: bool,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_sizes(s: &str) -> Result<(usize, usize), BenchError> {
    let bad = || BenchError::InvalidSweep(format!("sizes `{s}` (expected MIN:MAX)"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn config(args: &RunArgs) -> Result<BenchConfig, BenchError> {
    let mut runtime = match &args.config {
        Some(path) => RuntimeConfig::load(path)?,
        None => RuntimeConfig::default(),
    };
    runtime.features.use_wand_barrier |= args.wand_barrier;
    runtime.features.use_ipi_get |= args.ipi_get;
    let (min_size, max_size) = parse_sizes(&args.sizes)?;
    Ok(BenchConfig {
        routines: Routine::parse_list(&args.suite)?,
        rows: args.rows,
        cols: args.cols,
        pes: args.pes.unwrap_or(args.rows * args.cols),
        min_size,
        max_size,
        reps: args.reps,
        seed: args.seed,
        runtime,
        ..BenchConfig::default()
    })
}

fn run(args: &RunArgs) -> Result<(), BenchError> {
    let cfg = config(args)?;
    let samples = run_suite(&cfg)?;
    let report = emit_report(&samples, &fit_suite(&samples), args.format);
    match &args.out {
        Some(path) => std::fs::write(path, report)?,
        None => print!("{report}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}
