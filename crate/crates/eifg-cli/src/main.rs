use clap::{Args, Parser, Subcommand};
use eifg_cli::{cmd_bench, cmd_converge, cmd_simulate, config, CliError};
use std::path::PathBuf;

/// Exponential-integrator Fourier Galerkin harness for periodic semilinear
/// parabolic equations.
#[derive(Parser)]
#[command(name = "eifg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence sweep and write converge.csv
    Converge(CommonArgs),
    /// Run one simulation, writing snapshots and diagnostics.csv
    Simulate(CommonArgs),
    /// Time stepping cost across resolutions and write bench.csv
    Bench(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Cap on concurrently running sweep entries (timing columns are cleanest
    /// at 1)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn validated(args: &CommonArgs) -> Result<config::Validated, CliError> {
    let raw = config::load(&args.config)?;
    let mut v = config::validate(&raw)?;
    if let Some(out) = &args.out {
        v.output_dir = out.clone();
    }
    Ok(v)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Converge(args) => {
            let v = validated(args)?;
            let report = cmd_converge(&v, args.jobs)?;
            println!(
                "converge: {} rows -> {}",
                report.table.records.len(),
                report.csv_path.display()
            );
        }
        Command::Simulate(args) => {
            let v = validated(args)?;
            let report = cmd_simulate(&v)?;
            println!(
                "simulate: {} diagnostics rows, {} snapshots -> {}",
                report.rows.len(),
                report.snapshots.len(),
                report.csv_path.display()
            );
        }
        Command::Bench(args) => {
            let v = validated(args)?;
            let report = cmd_bench(&v)?;
            println!(
                "bench: {} rows -> {}",
                report.rows.len(),
                report.csv_path.display()
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
