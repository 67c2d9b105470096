use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use gridroll::compare::{compare, render, CompareFilter, JoinKey};
use gridroll::config::parse_scenario;
use gridroll::matrix::instance_for;
use gridroll::report::{config_hash, write_schedule};
use gridroll::{generate_synthetic, run_matrix_with, write_instance, CliError, MatrixOptions, RunConfig, SyntheticSpec};
use gridroll_core::scheduler::{dynamic_schedule_with, SelectionMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "gridroll", version, about = "Robust rolling-horizon microgrid experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum By {
    Param,
    Budget,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance as CSV files.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        households: Option<usize>,
        #[arg(long)]
        evs: Option<usize>,
        #[arg(long)]
        pv_systems: Option<usize>,
    },
    /// Run the experiment matrix of a configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Also write one per-slot trace per run.
        #[arg(long)]
        traces: bool,
    },
    /// Choose dynamic start slots and write them as CSV.
    Schedule {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "B")]
        scenario: String,
        /// Defaults to schedule.csv in the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve the selection exactly with a time limit in seconds.
        #[arg(long)]
        exact: Option<u64>,
    },
    /// Relative improvement of OTHER over BASE per scenario, key and seed.
    Compare {
        base: PathBuf,
        other: PathBuf,
        #[arg(long, value_enum, default_value = "param")]
        by: By,
        #[arg(long)]
        base_mode: Option<String>,
        #[arg(long)]
        other_mode: Option<String>,
        /// Prints to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData { out, days, seed, households, evs, pv_systems } => {
            let mut spec = SyntheticSpec { days, ..SyntheticSpec::default() };
            spec.households = households.unwrap_or(spec.households);
            spec.evs = evs.unwrap_or(spec.evs);
            spec.pv_systems = pv_systems.unwrap_or(spec.pv_systems);
            let inst = generate_synthetic(&spec, &mut ChaCha8Rng::seed_from_u64(seed))?;
            write_instance(&inst, &out)?;
            println!("wrote {} slots to {}", inst.grid.horizon_slots(), out.display());
        }
        Command::Simulate { config, traces } => {
            let config = RunConfig::from_file(&config)?;
            let out = run_matrix_with(&config, &MatrixOptions { traces })?;
            println!("{} rows, config {}", out.rows.len(), out.config_hash);
            println!("{}", out.results.display());
        }
        Command::Schedule { config, k, scenario, out, exact } => {
            let config = RunConfig::from_file(&config)?;
            let inst = instance_for(&config)?;
            let sc = parse_scenario(&scenario)?;
            let mode = exact.map_or(SelectionMode::Greedy, |s| SelectionMode::Exact { time_limit: Duration::from_secs(s) });
            let (schedule, selection) = dynamic_schedule_with(&inst, &sc, &config.ramp, k, config.eta, mode)?;
            let path = out.unwrap_or_else(|| config.out_dir.join("schedule.csv"));
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            write_schedule(&path, &selection, &schedule.forced_da_slots)?;
            println!(
                "{} slots, objective {:.6} EUR, config {}",
                schedule.start_slots.len(),
                selection.objective,
                config_hash(&config.canonical)
            );
        }
        Command::Compare { base, other, by, base_mode, other_mode, out } => {
            let by = match by {
                By::Param => JoinKey::Param,
                By::Budget => JoinKey::Budget,
            };
            let rows = compare(&base, &other, by, &CompareFilter { base_mode, other_mode })?;
            let text = render(&rows);
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
