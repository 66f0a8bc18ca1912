//! `spike-age`: batch runner for simulations, PDE solves and validations.

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Kind, Overrides, Setup};
use error::CliResult;
use output::OutDir;

#[derive(Parser)]
#[command(name = "spike-age", version, about = "Spike train simulation, age PDEs and their validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for replications; 0 uses all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replications, one spike train file each.
    Simulate {
        /// TOML file with the [model] table and its [kernel] or [rate].
        #[arg(long)]
        model: Option<PathBuf>,
        /// TOML file with the [past] table.
        #[arg(long)]
        past: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Solve the age, survival or Wold system on the configured grid.
    SolvePde,
    /// Tabulate the Hawkes conditional rate surfaces.
    PhiSurface,
    /// Run the configured validation scenario.
    Validate,
    /// Distance of the depth-M survival solutions to the limit system.
    LimitStudy,
}

fn run(cli: Cli) -> CliResult<bool> {
    let mut over = Overrides { seed: cli.seed, ..Overrides::default() };
    let kind = match cli.command {
        Command::Simulate { model, past, horizon, reps } => {
            over.model = model;
            over.past = past;
            over.horizon = horizon;
            over.reps = reps;
            Kind::Simulate
        }
        Command::SolvePde => Kind::SolvePde,
        Command::PhiSurface => Kind::PhiSurface,
        Command::Validate => Kind::Validate,
        Command::LimitStudy => Kind::LimitStudy,
    };
    let setup = Setup::load(kind, cli.config.as_deref(), &over)?;
    let out = OutDir::create(&cli.out)?;
    let stats = experiments::run(&setup, &out)?;
    for s in &stats {
        let status = match s.bound {
            Some(_) if s.passes() => "PASS",
            Some(_) => "FAIL",
            None => "    ",
        };
        println!("{status} {} = {}", s.statistic, spike_age::csv::fmt_f64(s.value));
    }
    Ok(stats.iter().all(|s| s.passes()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start {jobs} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: tolerance checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
