use std::ops::Range;
use std::time::Duration;

use crate::model::DecisionSet;

/// Executed values of one slot, summed over devices of the same kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTrace {
    pub slot: usize,
    pub da_buy: f64,
    pub da_sell: f64,
    pub id_buy: f64,
    pub id_sell: f64,
    pub pv_used: f64,
    pub pv_realized: f64,
    pub load: f64,
    pub battery_charge: f64,
    pub battery_discharge: f64,
    pub ev_charge: f64,
    pub ev_discharge: f64,
    pub battery_soc: f64,
    pub ev_soc: f64,
    pub shortfall: f64,
    pub spill: f64,
}

/// One iteration of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub start: usize,
    pub window: Range<usize>,
    pub executed: Range<usize>,
    /// Day-ahead hours submitted by this iteration.
    pub submitted_hours: Range<usize>,
    /// Hash of every final decision in `[0, executed.end)` after execution.
    pub final_checksum: u64,
    /// Hash of all committed day-ahead hours after this iteration.
    pub committed_checksum: u64,
    pub committed_hours: usize,
    pub lp_cols: usize,
    pub lp_rows: usize,
    /// Worst-case objective of the window LP.
    pub window_objective: f64,
    pub solve_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    /// Market cost at realized prices plus settlement cost.
    pub actual_cost: f64,
    pub market_cost: f64,
    pub settlement_cost: f64,
    pub pv_realized: f64,
    pub pv_used: f64,
    /// Day-ahead, intraday and settlement purchases.
    pub energy_bought: f64,
    pub energy_sold: f64,
    pub net_bought: f64,
    pub iterations_run: usize,
    pub shortfall_slots: usize,
    /// `(slot, kWh)` bought after the fact to close realized gaps.
    pub shortfall_log: Vec<(usize, f64)>,
    pub spilled_energy: f64,
    pub final_decisions: DecisionSet,
    pub trace: Vec<SlotTrace>,
    pub iterations: Vec<IterationRecord>,
}

impl SimulationReport {
    pub fn total_solve_time(&self) -> Duration {
        self.iterations.iter().map(|i| i.solve_time).sum()
    }
}

/// Share of realized PV production that was used, in percent. Absent when
/// nothing was produced.
pub fn pv_usage(report: &SimulationReport) -> Option<f64> {
    (report.pv_realized > 0.0).then(|| 100.0 * report.pv_used / report.pv_realized)
}


fn hash_values<'a>(values: impl Iterator<Item = &'a f64>) -> u64 {
    use std::hash::{DefaultHasher, Hasher};
    let mut h = DefaultHasher::new();
    for v in values {
        h.write_u64(v.to_bits());
    }
    h.finish()
}

/// Hash of every per-slot decision in `[0, upto)`.
pub fn final_checksum(d: &DecisionSet, upto: usize) -> u64 {
    let per_device = [&d.pv_used, &d.bat_charge, &d.bat_discharge, &d.ev_charge, &d.ev_discharge];
    let slots = d.id_buy[..upto].iter().chain(&d.id_sell[..upto]);
    let devices = per_device.into_iter().flatten().flat_map(|series| &series[..upto]);
    hash_values(slots.chain(devices))
}

/// Hash of the day-ahead positions of hours `[0, hours)`.
pub fn committed_checksum(d: &DecisionSet, hours: usize) -> u64 {
    hash_values(d.da_buy[..hours].iter().chain(&d.da_sell[..hours]))
}
