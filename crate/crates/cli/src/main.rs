//! `ssd-relax`: distances to second-order dominance sets, projections,
//! cutting-plane solves and experiment sweeps from the command line.
//!
//! Exit codes: 0 success, 1 internal invariant failure, 2 bad input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ssd-relax", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    Inspection,
    Relief,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BenchmarkKind {
    Achievable,
    Tightened,
}

#[derive(Subcommand)]
enum Command {
    /// Transport distance from X to the distributions dominating Y.
    Distance { x: PathBuf, y: PathBuf },
    /// Projection of X onto the distributions dominating Y.
    Project {
        x: PathBuf,
        y: PathBuf,
        /// Write the JSON here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the cutting-plane solver on a scenario problem.
    Solve {
        problem: PathBuf,
        benchmark: PathBuf,
        /// Solver configuration (JSON); missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured penalty weight.
        #[arg(long)]
        alpha: Option<f64>,
        /// Overrides the configured iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Penalty-weight sweep on a generated instance, as a CSV table.
    Bench {
        family: Family,
        /// Comma-separated penalty weights, e.g. `0,0.5,1,5`.
        #[arg(long)]
        alphas: String,
        /// Generator spec (JSON); missing fields take defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "achievable")]
        benchmark: BenchmarkKind,
        /// Tightening factor for `--benchmark tightened`.
        #[arg(long, default_value_t = 0.5)]
        shrink: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Cdf, shortfall and excess curves of one or more distributions.
    Curves {
        #[arg(required = true)]
        dists: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the closed-form distance, the projection and the LP
    /// oracle on one pair.
    Verify { x: PathBuf, y: PathBuf },
    /// Write a generated instance and its benchmark to JSON files.
    Generate {
        family: Family,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "achievable")]
        benchmark: BenchmarkKind,
        #[arg(long, default_value_t = 0.5)]
        shrink: f64,
        #[arg(long)]
        problem_out: PathBuf,
        #[arg(long)]
        benchmark_out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), commands::Failure> {
    match cli.command {
        Command::Distance { x, y } => commands::distance(&x, &y),
        Command::Project { x, y, out } => commands::project(&x, &y, out.as_deref()),
        Command::Solve {
            problem,
            benchmark,
            config,
            alpha,
            max_iter,
            out,
        } => commands::solve(
            &problem,
            &benchmark,
            config.as_deref(),
            alpha,
            max_iter,
            out.as_deref(),
        ),
        Command::Bench {
            family,
            alphas,
            spec,
            seed,
            benchmark,
            shrink,
            config,
            out,
        } => commands::bench(&commands::BenchArgs {
            family,
            alphas: &alphas,
            spec: spec.as_deref(),
            seed,
            benchmark,
            shrink,
            config: config.as_deref(),
            out: out.as_deref(),
        }),
        Command::Curves { dists, out } => commands::curves(&dists, out.as_deref()),
        Command::Verify { x, y } => commands::verify(&x, &y),
        Command::Generate {
            family,
            spec,
            seed,
            benchmark,
            shrink,
            problem_out,
            benchmark_out,
        } => commands::generate(
            family,
            spec.as_deref(),
            seed,
            benchmark,
            shrink,
            &problem_out,
            &benchmark_out,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(f) = commands::configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
