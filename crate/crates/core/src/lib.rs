//! Robust rolling-horizon energy management for a residential microgrid.

pub mod horizon;
pub mod model;
pub mod robust;
pub mod scheduler;

use gridroll_solver::{BinaryStatus, LpStatus, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("window {start}..{end} is not a non-empty part of the {horizon}-slot horizon")]
    WindowOutsideHorizon { start: usize, end: usize, horizon: usize },
    #[error("day-ahead hour {hour} is free but only partly inside the window")]
    DayAheadHourSplit { hour: usize },
    #[error("fixed day-ahead value {value} in hour {hour} violates the grid capacity {capacity}")]
    FixedDayAheadExceedsGrid { hour: usize, value: f64, capacity: f64 },
    #[error("fixed SoC {soc} of {device} outside [0, {capacity}]")]
    FixedSocOutOfRange { device: String, soc: f64, capacity: f64 },
    #[error("decisions do not cover slot {slot}")]
    CoverageGap { slot: usize },
}

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("budget {gamma} outside [0, {dimension}]")]
    InvalidGamma { gamma: f64, dimension: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("information state at slot {now} does not match window start {window_start} in a {horizon}-slot horizon")]
    InconsistentInfo { now: usize, window_start: usize, horizon: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum HorizonError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("window {start}..{end} has no optimal solution ({status:?})")]
    WindowInfeasible { start: usize, end: usize, status: LpStatus },
    #[error("SoC {soc} of {device} after slot {slot} outside [0, {capacity}]")]
    SocOutOfRange { device: String, slot: usize, soc: f64, capacity: f64 },
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("iteration budget {k} is below the {forced} forced slots")]
    BudgetBelowForced { k: usize, forced: usize },
    #[error("slot {0} outside the horizon")]
    SlotOutsideHorizon(usize),
    #[error("exact selection ended without a solution ({0:?})")]
    NoSelection(BinaryStatus),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
