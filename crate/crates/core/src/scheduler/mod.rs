//! Choice of rolling-horizon start slots by their information gain.
//!
//! A start at `s` pays off for PV slots shortly after `s`, where the short
//! forecast narrows the PV set, and for EV arrivals before `s`, whose
//! realized demand is then known.

mod gains;
mod select;

pub use gains::{compute_v, compute_w, GainMatrix};
pub use select::{select_starts, SelectionMode, SelectionResult};

use crate::horizon::StartSchedule;
use crate::model::MicrogridInstance;
use crate::robust::{DynamicPvRamp, ScenarioConfig};
use crate::SchedulerError;

pub const DEFAULT_ETA: f64 = 1.0;

/// Greedy schedule with `k` iterations, forced day-ahead slots included.
pub fn dynamic_schedule(
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    k: usize,
) -> Result<StartSchedule, SchedulerError> {
    dynamic_schedule_with(instance, scenario, ramp, k, DEFAULT_ETA, SelectionMode::Greedy).map(|(s, _)| s)
}

pub fn dynamic_schedule_with(
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    k: usize,
    eta: f64,
    mode: SelectionMode,
) -> Result<(StartSchedule, SelectionResult), SchedulerError> {
    let gains = GainMatrix::build(instance, scenario, ramp, eta);
    let forced = instance.grid.day_ahead_submission_slots();
    let selection = select_starts(&gains, k, &forced, mode)?;
    let schedule = StartSchedule::from_starts(&instance.grid, selection.chosen_slots.iter().copied())?;
    Ok((schedule, selection))
}
