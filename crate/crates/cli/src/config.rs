//! Line-oriented `key = value` run configuration.
//!
//! Lists are comma separated. `#` starts a comment. Relative paths are taken
//! from the directory of the configuration file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use gridroll_core::horizon::{classical_schedule, StepSize};
use gridroll_core::model::TimeGrid;
use gridroll_core::robust::{DynamicPvRamp, ScenarioConfig};
use gridroll_solver::{Backend, SolverOptions};

use crate::{CliError, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Static,
    Classical,
    Dynamic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Classical => "classical",
            Mode::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named scenario. `B+pA` takes the load, PV and EV alphas of B and the
/// price alphas of A.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedScenario {
    pub name: String,
    pub config: ScenarioConfig,
}

/// Iteration budget of a dynamic run: a count, or the number of iterations
/// a classical schedule with the given step would run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Count(usize),
    MatchStep(usize),
}

impl Budget {
    pub fn resolve(self, grid: &TimeGrid) -> Result<usize, CliError> {
        match self {
            Budget::Count(k) => Ok(k),
            Budget::MatchStep(step) => Ok(classical_schedule(grid, StepSize::Slots(step))?.iterations()),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Count(k) => write!(f, "{k}"),
            Budget::MatchStep(s) => write!(f, "step{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic { spec: SyntheticSpec, seed: u64 },
    Dir(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub modes: Vec<Mode>,
    pub scenarios: Vec<NamedScenario>,
    pub step_sizes: Vec<usize>,
    pub budgets: Vec<Budget>,
    pub eta: f64,
    pub ramp: DynamicPvRamp,
    pub seeds: Vec<u64>,
    pub horizon_days: usize,
    pub data: DataSource,
    pub out_dir: PathBuf,
    pub solver: SolverOptions,
    pub threads: usize,
    /// Writes measured wall time into `wall_ms`; off keeps outputs
    /// byte-identical between runs.
    pub record_time: bool,
    /// Normalised `key = value` text; its hash identifies the outputs.
    pub canonical: String,
}

const KEYS: &[&str] = &[
    "mode",
    "scenario",
    "step_size",
    "iterations",
    "eta",
    "improved_window_slots",
    "seeds",
    "horizon_days",
    "data_dir",
    "synthetic",
    "data_seed",
    "households",
    "evs",
    "pv_systems",
    "grid_capacity",
    "out_dir",
    "alpha_load",
    "alpha_pv",
    "alpha_ev",
    "alpha_da",
    "alpha_id",
    "gamma_load",
    "gamma_pv",
    "ev_time_window_slots",
    "solver_backend",
    "solver_feasibility_tol",
    "solver_optimality_tol",
    "threads",
    "record_time",
];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {raw:?}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected true or false, found {raw:?}"))),
    }
}

fn preset(name: &str) -> Result<ScenarioConfig, CliError> {
    if name == "none" {
        return Ok(ScenarioConfig::deterministic());
    }
    ScenarioConfig::preset(name).ok_or_else(|| CliError::Config(format!("unknown scenario {name:?}")))
}

pub fn parse_scenario(name: &str) -> Result<ScenarioConfig, CliError> {
    match name.split_once("+p") {
        Some((devices, prices)) => {
            let base = preset(devices)?;
            let p = preset(prices)?;
            Ok(ScenarioConfig { alpha_da: p.alpha_da, alpha_id: p.alpha_id, ..base })
        }
        None => preset(name),
    }
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>, CliError> {
    let mut seeds = Vec::new();
    for item in list(raw) {
        match item.split_once("..=") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (parse("seeds", a.trim())?, parse("seeds", b.trim())?);
                seeds.extend(a..=b);
            }
            None => seeds.push(parse("seeds", item)?),
        }
    }
    Ok(seeds)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses configuration text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key {key:?}", i + 1)));
            }
            if kv.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        let canonical: String = kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let get = |k: &str| kv.get(k).map(String::as_str);

        let modes = list(get("mode").ok_or_else(|| CliError::Config("mode is required".into()))?)
            .map(|m| match m {
                "static" => Ok(Mode::Static),
                "classical" => Ok(Mode::Classical),
                "dynamic" => Ok(Mode::Dynamic),
                other => Err(CliError::Config(format!("unknown mode {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut scenarios = Vec::new();
        for name in list(get("scenario").unwrap_or("B")) {
            let mut config = parse_scenario(name)?;
            let overrides = [
                ("alpha_load", &mut config.alpha_load),
                ("alpha_pv", &mut config.alpha_pv),
                ("alpha_ev", &mut config.alpha_ev),
                ("alpha_da", &mut config.alpha_da),
                ("alpha_id", &mut config.alpha_id),
            ];
            for (key, slot) in overrides {
                if let Some(v) = get(key) {
                    *slot = parse(key, v)?;
                }
            }
            if let Some(v) = get("gamma_load") {
                config.gamma_load = Some(parse("gamma_load", v)?);
            }
            if let Some(v) = get("gamma_pv") {
                config.gamma_pv = Some(parse("gamma_pv", v)?);
            }
            if let Some(v) = get("ev_time_window_slots") {
                config.ev_time_window_slots = Some(parse("ev_time_window_slots", v)?);
            }
            scenarios.push(NamedScenario { name: name.to_string(), config });
        }

        let step_sizes = get("step_size").map_or(Ok(Vec::new()), |v| list(v).map(|s| parse("step_size", s)).collect())?;
        let budgets = get("iterations").map_or(Ok(Vec::new()), |v| {
            list(v)
                .map(|s| match s.strip_prefix("step") {
                    Some(step) => parse("iterations", step).map(Budget::MatchStep),
                    None => parse("iterations", s).map(Budget::Count),
                })
                .collect()
        })?;

        let horizon_days = get("horizon_days").map_or(Ok(3), |v| parse("horizon_days", v))?;
        let synthetic = get("synthetic").map_or(Ok(false), |v| parse_bool("synthetic", v))?;
        let data = match (synthetic, get("data_dir")) {
            (true, Some(_)) => return Err(CliError::Config("set either synthetic or data_dir, not both".into())),
            (false, None) => return Err(CliError::Config("set data_dir or synthetic = true".into())),
            (false, Some(dir)) => DataSource::Dir(base.join(dir)),
            (true, None) => {
                let mut spec = SyntheticSpec { days: horizon_days, ..SyntheticSpec::default() };
                if let Some(v) = get("households") {
                    spec.households = parse("households", v)?;
                }
                if let Some(v) = get("evs") {
                    spec.evs = parse("evs", v)?;
                }
                if let Some(v) = get("pv_systems") {
                    spec.pv_systems = parse("pv_systems", v)?;
                }
                if let Some(v) = get("grid_capacity") {
                    spec.grid_capacity = parse("grid_capacity", v)?;
                }
                spec.validate()?;
                DataSource::Synthetic { spec, seed: get("data_seed").map_or(Ok(0), |v| parse("data_seed", v))? }
            }
        };

        let mut solver = SolverOptions::default();
        if let Some(v) = get("solver_backend") {
            solver.backend = match v {
                "auto" => Backend::Auto,
                "dense" => Backend::Dense,
                "sparse" => Backend::Sparse,
                other => return Err(CliError::Config(format!("unknown solver_backend {other:?}"))),
            };
        }
        if let Some(v) = get("solver_feasibility_tol") {
            solver.feasibility_tol = parse("solver_feasibility_tol", v)?;
        }
        if let Some(v) = get("solver_optimality_tol") {
            solver.optimality_tol = parse("solver_optimality_tol", v)?;
        }

        let config = Self {
            modes,
            scenarios,
            step_sizes,
            budgets,
            eta: get("eta").map_or(Ok(1.0), |v| parse("eta", v))?,
            ramp: DynamicPvRamp {
                improved_window_slots: get("improved_window_slots").map_or(Ok(8), |v| parse("improved_window_slots", v))?,
            },
            seeds: parse_seeds(get("seeds").ok_or_else(|| CliError::Config("seeds is required".into()))?)?,
            horizon_days,
            data,
            out_dir: base.join(get("out_dir").unwrap_or("out")),
            solver,
            threads: get("threads").map_or(Ok(1), |v| parse("threads", v))?,
            record_time: get("record_time").map_or(Ok(false), |v| parse_bool("record_time", v))?,
            canonical,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: &str| Err(CliError::Config(m.to_string()));
        if self.modes.is_empty() {
            return err("mode lists no modes");
        }
        if self.scenarios.is_empty() {
            return err("scenario lists no scenarios");
        }
        if self.seeds.is_empty() {
            return err("seeds must not be empty");
        }
        let classical = self.modes.contains(&Mode::Classical);
        let dynamic = self.modes.contains(&Mode::Dynamic);
        if classical && self.step_sizes.is_empty() {
            return err("classical mode needs step_size");
        }
        if dynamic && self.budgets.is_empty() {
            return err("dynamic mode needs iterations");
        }
        if !classical && !self.step_sizes.is_empty() {
            return err("step_size is only used by classical mode");
        }
        if !dynamic && !self.budgets.is_empty() {
            return err("iterations is only used by dynamic mode");
        }
        if self.horizon_days == 0 {
            return err("horizon_days must be at least 1");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return err("eta must be a non-negative number");
        }
        if self.threads == 0 {
            return err("threads must be at least 1");
        }
        Ok(())
    }

    /// Every run in output order: modes, scenarios, schedule parameters,
    /// seeds.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut runs = Vec::new();
        for &mode in &self.modes {
            let params: Vec<Param> = match mode {
                Mode::Static => vec![Param::Full],
                Mode::Classical => self.step_sizes.iter().map(|&s| Param::Step(s)).collect(),
                Mode::Dynamic => self.budgets.iter().map(|&b| Param::Budget(b)).collect(),
            };
            for (si, _) in self.scenarios.iter().enumerate() {
                for &param in &params {
                    for &seed in &self.seeds {
                        runs.push(RunSpec { mode, scenario: si, param, seed });
                    }
                }
            }
        }
        runs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Full,
    Step(usize),
    Budget(Budget),
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Full => f.write_str("full"),
            Param::Step(s) => write!(f, "{s}"),
            Param::Budget(b) => write!(f, "k{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub mode: Mode,
    /// Index into [`RunConfig::scenarios`].
    pub scenario: usize,
    pub param: Param,
    pub seed: u64,
}
