//! Rolling and folding horizon loop over an arbitrary schedule of
//! iteration start slots.

mod engine;
mod report;

pub use engine::{run, run_with, run_with_realization, HorizonOptions, HorizonState};
pub use report::{committed_checksum, final_checksum, pv_usage, IterationRecord, SimulationReport, SlotTrace};

use crate::model::{TimeGrid, SLOTS_PER_DAY};
use crate::HorizonError;

/// Largest step that keeps every noon slot on the start grid.
pub const MAX_FOLDING_STEP: usize = SLOTS_PER_DAY / 2;

/// Distance between classical iteration starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSize {
    Slots(usize),
    /// One window over the whole horizon.
    FullHorizon,
}

/// Ordered iteration start slots. Day-ahead submissions happen at the
/// forced slots; a static schedule solves the horizon in one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StartSchedule {
    pub start_slots: Vec<usize>,
    pub forced_da_slots: Vec<usize>,
    pub is_static: bool,
}

impl StartSchedule {
    /// Fully static model: one start at slot 0 submitting every day.
    pub fn full_horizon() -> Self {
        Self { start_slots: vec![0], forced_da_slots: vec![0], is_static: true }
    }

    /// Union of `starts` and the day-ahead submission slots.
    pub fn from_starts(grid: &TimeGrid, starts: impl IntoIterator<Item = usize>) -> Result<Self, HorizonError> {
        let forced = grid.day_ahead_submission_slots();
        let mut start_slots: Vec<usize> = starts.into_iter().chain(forced.iter().copied()).collect();
        start_slots.sort_unstable();
        start_slots.dedup();
        let schedule = Self { start_slots, forced_da_slots: forced, is_static: false };
        schedule.validate(grid)?;
        Ok(schedule)
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<(), HorizonError> {
        if self.start_slots.first() != Some(&0) {
            return Err(HorizonError::Schedule("slot 0 is not a start slot".into()));
        }
        if !self.start_slots.windows(2).all(|w| w[0] < w[1]) {
            return Err(HorizonError::Schedule("start slots are not strictly increasing".into()));
        }
        if let Some(&last) = self.start_slots.last() {
            if last >= grid.horizon_slots() {
                return Err(HorizonError::Schedule(format!("start slot {last} outside the horizon")));
            }
        }
        let expected = if self.is_static { vec![0] } else { grid.day_ahead_submission_slots() };
        if self.forced_da_slots != expected {
            return Err(HorizonError::Schedule(format!(
                "day-ahead slots {:?} differ from {:?}",
                self.forced_da_slots, expected
            )));
        }
        if let Some(missing) = self.forced_da_slots.iter().find(|s| self.start_slots.binary_search(s).is_err()) {
            return Err(HorizonError::Schedule(format!("day-ahead slot {missing} is not a start slot")));
        }
        Ok(())
    }

    pub fn is_forced(&self, slot: usize) -> bool {
        self.forced_da_slots.contains(&slot)
    }

    pub fn iterations(&self) -> usize {
        self.start_slots.len()
    }
}

/// Starts every `step` slots plus the day-ahead slots. A step of one day
/// means the day-ahead slots only.
pub fn classical_schedule(grid: &TimeGrid, step: StepSize) -> Result<StartSchedule, HorizonError> {
    match step {
        StepSize::FullHorizon => Ok(StartSchedule::full_horizon()),
        StepSize::Slots(SLOTS_PER_DAY) => StartSchedule::from_starts(grid, []),
        StepSize::Slots(s) if s > 0 && MAX_FOLDING_STEP % s == 0 => {
            StartSchedule::from_starts(grid, (0..grid.horizon_slots()).step_by(s))
        }
        StepSize::Slots(s) => Err(HorizonError::Schedule(format!(
            "step size {s} neither divides {MAX_FOLDING_STEP} nor equals {SLOTS_PER_DAY}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_day_examples() {
        let grid = TimeGrid::days(3).unwrap();
        assert_eq!(classical_schedule(&grid, StepSize::Slots(96)).unwrap().start_slots, vec![0, 48, 144]);
        assert_eq!(
            classical_schedule(&grid, StepSize::Slots(48)).unwrap().start_slots,
            vec![0, 48, 96, 144, 192, 240]
        );
        let full = classical_schedule(&grid, StepSize::FullHorizon).unwrap();
        assert_eq!(full.start_slots, vec![0]);
        assert!(full.is_static);
        let two = classical_schedule(&grid, StepSize::Slots(2)).unwrap();
        assert_eq!(two.iterations(), 144);
        assert!(classical_schedule(&grid, StepSize::Slots(5)).is_err());
        assert!(classical_schedule(&grid, StepSize::Slots(0)).is_err());
        assert!(classical_schedule(&grid, StepSize::Slots(72)).is_err());
    }

    #[test]
    fn odd_steps_still_contain_noon() {
        let grid = TimeGrid::days(3).unwrap();
        for step in [1, 2, 3, 4, 6, 8, 12, 16, 24, 48] {
            let s = classical_schedule(&grid, StepSize::Slots(step)).unwrap();
            assert!(s.forced_da_slots.iter().all(|f| s.start_slots.contains(f)));
        }
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let grid = TimeGrid::days(2).unwrap();
        let mut s = StartSchedule::from_starts(&grid, [10]).unwrap();
        assert_eq!(s.start_slots, vec![0, 10, 48]);
        s.start_slots.remove(0);
        assert!(s.validate(&grid).is_err());
        assert!(StartSchedule::from_starts(&grid, [500]).is_err());
    }
}
