//! Experiment matrix: every mode, scenario, schedule parameter and seed.
//!
//! Runs may execute on several threads. Rows go through one appender that
//! writes them in matrix order and flushes after each line, so an aborted
//! matrix leaves every finished prefix on disk.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use gridroll_core::horizon::{classical_schedule, pv_usage, run_with, HorizonOptions, SimulationReport, StartSchedule, StepSize};
use gridroll_core::model::MicrogridInstance;
use gridroll_core::scheduler::{dynamic_schedule_with, SelectionMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{DataSource, Mode, Param, RunConfig, RunSpec};
use crate::report::{config_hash, write_trace, ResultRow, RESULTS_HEADER};
use crate::{generate_synthetic, load_instance, CliError};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatrixOptions {
    /// Writes one per-slot trace CSV per run under `traces/`.
    pub traces: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOutput {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub config_hash: String,
    pub rows: Vec<ResultRow>,
}

pub fn instance_for(config: &RunConfig) -> Result<MicrogridInstance, CliError> {
    match &config.data {
        DataSource::Synthetic { spec, seed } => generate_synthetic(spec, &mut ChaCha8Rng::seed_from_u64(*seed)),
        DataSource::Dir(dir) => load_instance(dir, Some(config.horizon_days * 96)),
    }
}

/// Start schedule of one run; dynamic budgets are resolved against the
/// instance grid.
pub fn schedule_for(config: &RunConfig, inst: &MicrogridInstance, spec: &RunSpec) -> Result<(StartSchedule, String), CliError> {
    let scenario = &config.scenarios[spec.scenario].config;
    match spec.param {
        Param::Full => Ok((StartSchedule::full_horizon(), spec.param.to_string())),
        Param::Step(step) => Ok((classical_schedule(&inst.grid, StepSize::Slots(step))?, step.to_string())),
        Param::Budget(budget) => {
            let k = budget.resolve(&inst.grid)?;
            let (schedule, _) = dynamic_schedule_with(inst, scenario, &config.ramp, k, config.eta, SelectionMode::Greedy)?;
            Ok((schedule, format!("k{k}")))
        }
    }
}

fn execute(config: &RunConfig, inst: &MicrogridInstance, spec: &RunSpec) -> Result<(ResultRow, SimulationReport), CliError> {
    let clock = Instant::now();
    let named = &config.scenarios[spec.scenario];
    let (schedule, param) = schedule_for(config, inst, spec)?;
    let opts = HorizonOptions { solver: config.solver, ..HorizonOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let report = run_with(inst, &named.config, &config.ramp, &schedule, &mut rng, &opts)?;
    let wall_ms = if config.record_time { clock.elapsed().as_millis() as f64 } else { 0.0 };
    let row = ResultRow {
        mode: spec.mode.to_string(),
        scenario: named.name.clone(),
        param,
        seed: Some(spec.seed),
        cost_eur: report.actual_cost,
        pv_used_kwh: report.pv_used,
        pv_realized_kwh: report.pv_realized,
        pv_usage_pct: pv_usage(&report),
        bought_kwh: report.energy_bought,
        sold_kwh: report.energy_sold,
        shortfall_slots: report.shortfall_slots as f64,
        spilled_kwh: report.spilled_energy,
        iterations: report.iterations_run as f64,
        wall_ms,
    };
    Ok((row, report))
}

/// Writes rows in matrix order and a mean row after each completed group.
struct Appender {
    out: BufWriter<fs::File>,
    group_size: usize,
    group: Vec<ResultRow>,
    rows: Vec<ResultRow>,
}

impl Appender {
    fn push(&mut self, row: ResultRow) -> Result<(), CliError> {
        writeln!(self.out, "{}", row.to_csv_line())?;
        self.group.push(row.clone());
        self.rows.push(row);
        if self.group.len() == self.group_size {
            let mean = ResultRow::mean(&self.group);
            writeln!(self.out, "{}", mean.to_csv_line())?;
            self.rows.push(mean);
            self.group.clear();
        }
        self.out.flush()?;
        Ok(())
    }
}

fn trace_name(spec: &RunSpec, scenario: &str, param: &str) -> String {
    format!("{}_{}_{}_{}.csv", spec.mode, scenario.replace('+', "_"), param, spec.seed)
}

fn write_manifest(config: &RunConfig, hash: &str, dir: &Path, runs: usize, opts: &MatrixOptions) -> Result<PathBuf, CliError> {
    let path = dir.join("manifest.txt");
    let data = match &config.data {
        DataSource::Synthetic { seed, .. } => format!("synthetic (data_seed {seed})"),
        DataSource::Dir(d) => d.display().to_string(),
    };
    let mut text = format!(
        "config_hash = {hash}\nengine = gridroll {}\ndata = {data}\nruns = {runs}\nresults = results.csv\n",
        env!("CARGO_PKG_VERSION")
    );
    if opts.traces {
        text.push_str("traces = traces/\n");
    }
    text.push_str("\n[config]\n");
    text.push_str(&config.canonical);
    fs::write(&path, text)?;
    Ok(path)
}

pub fn run_matrix(config: &RunConfig) -> Result<MatrixOutput, CliError> {
    run_matrix_with(config, &MatrixOptions::default())
}

pub fn run_matrix_with(config: &RunConfig, opts: &MatrixOptions) -> Result<MatrixOutput, CliError> {
    config.validate()?;
    let inst = instance_for(config)?;
    let runs = config.runs();
    let hash = config_hash(&config.canonical);
    fs::create_dir_all(&config.out_dir)?;
    let trace_dir = config.out_dir.join("traces");
    if opts.traces {
        fs::create_dir_all(&trace_dir)?;
    }
    let manifest = write_manifest(config, &hash, &config.out_dir, runs.len(), opts)?;
    let results = config.out_dir.join("results.csv");
    let mut out = BufWriter::new(fs::File::create(&results)?);
    writeln!(out, "{RESULTS_HEADER}")?;
    out.flush()?;
    let mut appender = Appender { out, group_size: config.seeds.len(), group: Vec::new(), rows: Vec::new() };

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<(ResultRow, SimulationReport), CliError>)>();
    let mut first_error: Option<CliError> = None;
    let mut run_error: Option<(usize, CliError)> = None;
    std::thread::scope(|scope| {
        for _ in 0..config.threads.min(runs.len().max(1)) {
            let tx = tx.clone();
            let (next, abort, runs, inst) = (&next, &abort, &runs, &inst);
            scope.spawn(move || loop {
                if abort.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= runs.len() {
                    break;
                }
                let result = execute(config, inst, &runs[i]);
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, (ResultRow, SimulationReport)> = BTreeMap::new();
        let mut written = 0;
        for (i, result) in rx {
            match result {
                Ok(done) => {
                    pending.insert(i, done);
                }
                Err(e) => {
                    abort.store(true, Ordering::Relaxed);
                    // the earliest failing run wins, whatever the thread timing
                    if run_error.as_ref().is_none_or(|(j, _)| i < *j) {
                        run_error = Some((i, e));
                    }
                    continue;
                }
            }
            while let Some((row, report)) = pending.remove(&written) {
                if opts.traces {
                    let name = trace_name(&runs[written], &row.scenario, &row.param);
                    if let Err(e) = write_trace(&trace_dir.join(name), &report.trace) {
                        abort.store(true, Ordering::Relaxed);
                        first_error.get_or_insert(e);
                        break;
                    }
                }
                if let Err(e) = appender.push(row) {
                    abort.store(true, Ordering::Relaxed);
                    first_error.get_or_insert(e);
                    break;
                }
                written += 1;
            }
        }
    });
    if let Some(e) = first_error.or(run_error.map(|(_, e)| e)) {
        return Err(e);
    }
    Ok(MatrixOutput { results, manifest, config_hash: hash, rows: appender.rows })
}

/// Dynamic budgets are reported by resolved iteration count, classical and
/// static runs by their own iteration count.
pub fn budget_of(row: &ResultRow) -> Option<usize> {
    if row.mode == Mode::Dynamic.as_str() {
        row.param.strip_prefix('k').and_then(|k| k.parse().ok())
    } else {
        Some(row.iterations as usize)
    }
}
