use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use earq_cli::{execute, load_threshold_grid, Command, RunOptions};

#[derive(Parser)]
#[command(name = "earq", version, about = "Bi-static sensing simulator with e-ARQ feedback")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one trajectory and write trace.csv and events.json.
    Run(Common),
    /// Simulate random trajectories and write stats.json and stats.csv.
    Montecarlo(Batch),
    /// Run one Monte Carlo batch per threshold pair and write sweep.json and sweep.csv.
    SweepThresholds(Sweep),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Noise seed for `run`, master seed for batches. Defaults to the scenario's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the side length of every obstacle, meters.
    #[arg(long, value_name = "METERS")]
    obstacle_side: Option<f64>,
    #[arg(long, value_name = "DB", allow_negative_numbers = true)]
    ack_db: Option<f64>,
    #[arg(long, value_name = "DB", allow_negative_numbers = true)]
    nack_db: Option<f64>,
}

#[derive(Args)]
struct Batch {
    #[command(flatten)]
    common: Common,
    /// Number of trajectories.
    #[arg(long, default_value_t = 300)]
    runs: usize,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Sweep {
    #[command(flatten)]
    batch: Batch,
    /// JSON list of {"ack_db", "nack_db"} pairs. Defaults to the scenario's thresholds.
    #[arg(long, value_name = "PATH")]
    thresholds_grid: Option<PathBuf>,
}

fn options(command: Command, c: Common) -> RunOptions {
    let mut o = RunOptions::new(command, c.scenario, c.out);
    o.master_seed = c.seed;
    o.obstacle_side_override = c.obstacle_side;
    o.ack_db = c.ack_db;
    o.nack_db = c.nack_db;
    o
}

fn batch_options(command: Command, b: Batch) -> RunOptions {
    let mut o = options(command, b.common);
    o.n_runs = b.runs;
    o.threads = b.threads;
    o
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = match cli.command {
        Cmd::Run(c) => Ok(options(Command::Run, c)),
        Cmd::Montecarlo(b) => Ok(batch_options(Command::MonteCarlo, b)),
        Cmd::SweepThresholds(s) => {
            let grid = s.thresholds_grid.as_deref().map(load_threshold_grid).transpose();
            grid.map(|g| {
                let mut o = batch_options(Command::SweepThresholds, s.batch);
                o.threshold_grid = g;
                o
            })
        }
    };
    match opts.and_then(|o| execute(&o)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
