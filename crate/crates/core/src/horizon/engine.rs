use std::ops::Range;
use std::time::Instant;

use gridroll_solver::{solve_lp_with, SolverOptions};
use rand::Rng;

use super::report::{committed_checksum, final_checksum};
use super::{IterationRecord, SimulationReport, SlotTrace, StartSchedule};
use crate::model::{
    build_deterministic_window, evaluate_actual_cost, DecisionSet, MicrogridInstance, WindowFixings, SLOTS_PER_DAY,
    SLOTS_PER_HOUR,
};
use crate::robust::{
    robustify_window_with, sample_realization, DynamicPvRamp, InfoState, ProtectionForm, Realization, ScenarioConfig,
};
use crate::HorizonError;

/// Window length of a day-ahead iteration: the rest of today plus tomorrow
/// when started at noon.
const DA_WINDOW_SLOTS: usize = SLOTS_PER_DAY + SLOTS_PER_DAY / 2;
const SOC_TOL: f64 = 1e-6;
const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonOptions {
    pub protection: ProtectionForm,
    pub solver: SolverOptions,
}

impl Default for HorizonOptions {
    fn default() -> Self {
        Self { protection: ProtectionForm::ClosedForm, solver: SolverOptions::default() }
    }
}

/// Ledger of one run. Slots before `now` are final.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonState {
    pub now: usize,
    pub committed_da: Vec<Option<(f64, f64)>>,
    pub battery_soc: Vec<f64>,
    pub ev_soc: Vec<f64>,
    /// NaN marks slots and hours not decided yet.
    pub final_decisions: DecisionSet,
    pub shortfall_log: Vec<(usize, f64)>,
}

impl HorizonState {
    pub fn new(instance: &MicrogridInstance) -> Self {
        let mut final_decisions = DecisionSet::zeros(instance);
        let all = [&mut final_decisions.da_buy, &mut final_decisions.da_sell, &mut final_decisions.id_buy, &mut final_decisions.id_sell];
        for series in all {
            series.fill(f64::NAN);
        }
        for group in [
            &mut final_decisions.pv_used,
            &mut final_decisions.bat_charge,
            &mut final_decisions.bat_discharge,
            &mut final_decisions.ev_charge,
            &mut final_decisions.ev_discharge,
        ] {
            for series in group.iter_mut() {
                series.fill(f64::NAN);
            }
        }
        Self {
            now: 0,
            committed_da: vec![None; instance.grid.num_hours()],
            battery_soc: instance.batteries.iter().map(|b| b.params.initial_soc).collect(),
            ev_soc: instance.evs.iter().map(|e| e.params.initial_soc).collect(),
            final_decisions,
            shortfall_log: Vec::new(),
        }
    }

    /// First slot not covered by submitted day-ahead positions.
    pub fn committed_end(&self) -> usize {
        self.committed_da.iter().take_while(|e| e.is_some()).count() * SLOTS_PER_HOUR
    }

    fn fixings(&self) -> WindowFixings {
        WindowFixings {
            day_ahead: self.committed_da.clone(),
            battery_soc: self.battery_soc.clone(),
            ev_soc: self.ev_soc.clone(),
        }
    }
}

/// Samples one realization from `rng` and runs the schedule against it.
pub fn run<R: Rng + ?Sized>(
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    schedule: &StartSchedule,
    rng: &mut R,
) -> Result<SimulationReport, HorizonError> {
    run_with(instance, scenario, ramp, schedule, rng, &HorizonOptions::default())
}

pub fn run_with<R: Rng + ?Sized>(
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    schedule: &StartSchedule,
    rng: &mut R,
    opts: &HorizonOptions,
) -> Result<SimulationReport, HorizonError> {
    let applied = scenario.apply_to(instance)?;
    let realization = sample_realization(rng, &applied, scenario);
    run_with_realization(&applied, scenario, ramp, schedule, &realization, opts)
}

/// Day-ahead hours submitted by an iteration starting at `start`.
fn submitted_hours(schedule: &StartSchedule, start: usize, hours: usize) -> Range<usize> {
    const HOURS_PER_DAY: usize = SLOTS_PER_DAY / SLOTS_PER_HOUR;
    if schedule.is_static {
        0..hours
    } else if !schedule.is_forced(start) {
        0..0
    } else if start == 0 {
        0..HOURS_PER_DAY.min(hours)
    } else {
        let day = start / SLOTS_PER_DAY + 1;
        day * HOURS_PER_DAY..((day + 1) * HOURS_PER_DAY).min(hours)
    }
}

/// Runs the schedule against a fixed realization, so several schedules can
/// be compared on identical uncertainty.
pub fn run_with_realization(
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    schedule: &StartSchedule,
    realization: &Realization,
    opts: &HorizonOptions,
) -> Result<SimulationReport, HorizonError> {
    let inst = scenario.apply_to(instance)?;
    schedule.validate(&inst.grid)?;
    let horizon = inst.grid.horizon_slots();
    let hours = inst.grid.num_hours();
    let realized_prices = realization.prices(&inst, scenario);
    let mut state = HorizonState::new(&inst);
    let mut plan = DecisionSet::zeros(&inst);
    let mut trace = Vec::with_capacity(horizon);
    let mut iterations = Vec::with_capacity(schedule.iterations());
    let mut totals = Totals::default();

    for (idx, &start) in schedule.start_slots.iter().enumerate() {
        let next = schedule.start_slots.get(idx + 1).copied().unwrap_or(horizon);
        let window_end = if schedule.is_static {
            horizon
        } else if schedule.is_forced(start) {
            (start + DA_WINDOW_SLOTS).min(horizon)
        } else {
            state.committed_end()
        };
        let window = start..window_end;
        let det = build_deterministic_window(&inst, window.clone(), &state.fixings())?;
        let info = InfoState::at(start, realization);
        let rob = robustify_window_with(&det, &inst, scenario, ramp, &info, opts.protection)?;
        let clock = Instant::now();
        let solution = solve_lp_with(&rob.lp, &opts.solver)?;
        let solve_time = clock.elapsed();
        if !solution.is_optimal() {
            return Err(HorizonError::WindowInfeasible { start, end: window_end, status: solution.status });
        }
        rob.extract(&solution, &mut plan);

        let submitted = submitted_hours(schedule, start, hours);
        for h in submitted.clone() {
            state.committed_da[h] = Some((plan.da_buy[h], plan.da_sell[h]));
            state.final_decisions.da_buy[h] = plan.da_buy[h];
            state.final_decisions.da_sell[h] = plan.da_sell[h];
        }
        for t in start..next {
            let row = execute_slot(&inst, scenario, realization, &plan, &mut state, &realized_prices, &mut totals, t)?;
            trace.push(row);
        }
        state.now = next;
        let committed = state.committed_da.iter().take_while(|e| e.is_some()).count();
        iterations.push(IterationRecord {
            start,
            window,
            executed: start..next,
            submitted_hours: submitted,
            final_checksum: final_checksum(&state.final_decisions, next),
            committed_checksum: committed_checksum(&state.final_decisions, committed),
            committed_hours: committed,
            lp_cols: rob.lp.num_cols(),
            lp_rows: rob.lp.num_rows(),
            window_objective: solution.objective,
            solve_time,
        });
    }

    let market_cost = evaluate_actual_cost(&state.final_decisions, &realized_prices)?;
    let d = &state.final_decisions;
    let energy_bought = d.da_buy.iter().sum::<f64>() + d.id_buy.iter().sum::<f64>() + totals.shortfall;
    let energy_sold = d.da_sell.iter().sum::<f64>() + d.id_sell.iter().sum::<f64>();
    Ok(SimulationReport {
        actual_cost: market_cost + totals.settlement_cost,
        market_cost,
        settlement_cost: totals.settlement_cost,
        pv_realized: totals.pv_realized,
        pv_used: totals.pv_used,
        energy_bought,
        energy_sold,
        net_bought: energy_bought - energy_sold,
        iterations_run: iterations.len(),
        shortfall_slots: state.shortfall_log.len(),
        shortfall_log: state.shortfall_log.clone(),
        spilled_energy: totals.spill,
        final_decisions: state.final_decisions,
        trace,
        iterations,
    })
}

#[derive(Default)]
struct Totals {
    pv_realized: f64,
    pv_used: f64,
    shortfall: f64,
    settlement_cost: f64,
    spill: f64,
}

fn check_soc(soc: &mut f64, capacity: f64, device: &str, slot: usize) -> Result<(), HorizonError> {
    if *soc < -SOC_TOL || *soc > capacity + SOC_TOL {
        return Err(HorizonError::SocOutOfRange { device: device.to_string(), slot, soc: *soc, capacity });
    }
    *soc = soc.clamp(0.0, capacity);
    Ok(())
}

/// Applies the planned decisions of slot `t` to the realized world and
/// settles the balance.
#[allow(clippy::too_many_arguments)]
fn execute_slot(
    inst: &MicrogridInstance,
    scenario: &ScenarioConfig,
    realization: &Realization,
    plan: &DecisionSet,
    state: &mut HorizonState,
    prices: &crate::model::MarketPrices,
    totals: &mut Totals,
    t: usize,
) -> Result<SlotTrace, HorizonError> {
    let fin = &mut state.final_decisions;
    let (da_buy, da_sell) = state.committed_da[t / SLOTS_PER_HOUR]
        .map(|(b, s)| (b / SLOTS_PER_HOUR as f64, s / SLOTS_PER_HOUR as f64))
        .expect("day-ahead committed before execution");
    fin.id_buy[t] = plan.id_buy[t];
    fin.id_sell[t] = plan.id_sell[t];
    let load = realization.total_load(inst, scenario, t);

    let mut pv_used = 0.0;
    let mut pv_realized = 0.0;
    for p in 0..inst.pv.len() {
        let available = realization.pv(inst, scenario, p, t);
        let used = plan.pv_used[p][t].min(available);
        fin.pv_used[p][t] = used;
        pv_used += used;
        pv_realized += available;
    }

    let (mut bc, mut bd, mut bsoc) = (0.0, 0.0, 0.0);
    for (k, battery) in inst.batteries.iter().enumerate() {
        let (c, d) = (plan.bat_charge[k][t], plan.bat_discharge[k][t]);
        fin.bat_charge[k][t] = c;
        fin.bat_discharge[k][t] = d;
        state.battery_soc[k] += battery.params.soc_delta(c, d);
        check_soc(&mut state.battery_soc[k], battery.params.capacity, &battery.id, t)?;
        bc += c;
        bd += d;
        bsoc += state.battery_soc[k];
    }

    let (mut ec, mut ed, mut esoc) = (0.0, 0.0, 0.0);
    for (e, ev) in inst.evs.iter().enumerate() {
        let away = (0..ev.trips.len()).any(|k| {
            (realization.actual_depart(inst, e, k)..realization.actual_arrive(inst, e, k)).contains(&t)
        });
        let (c, d) = if away { (0.0, 0.0) } else { (plan.ev_charge[e][t], plan.ev_discharge[e][t]) };
        fin.ev_charge[e][t] = c;
        fin.ev_discharge[e][t] = d;
        state.ev_soc[e] += ev.params.soc_delta(c, d);
        for k in 0..ev.trips.len() {
            if realization.actual_arrive(inst, e, k) == t {
                state.ev_soc[e] -= realization.ev_demand(inst, scenario, e, k);
            }
        }
        check_soc(&mut state.ev_soc[e], ev.params.capacity, &ev.id, t)?;
        ec += c;
        ed += d;
        esoc += state.ev_soc[e];
    }

    let supply = da_buy + fin.id_buy[t] + pv_used + bd + ed - da_sell - fin.id_sell[t] - bc - ec;
    let gap = supply - load;
    let (shortfall, spill) = if gap < -BALANCE_TOL { (-gap, 0.0) } else { (0.0, gap.max(0.0)) };
    if shortfall > 0.0 {
        state.shortfall_log.push((t, shortfall));
        totals.shortfall += shortfall;
        totals.settlement_cost += shortfall * prices.id_buy_price[t];
    }
    totals.spill += spill;
    totals.pv_used += pv_used;
    totals.pv_realized += pv_realized;

    Ok(SlotTrace {
        slot: t,
        da_buy,
        da_sell,
        id_buy: fin.id_buy[t],
        id_sell: fin.id_sell[t],
        pv_used,
        pv_realized,
        load,
        battery_charge: bc,
        battery_discharge: bd,
        ev_charge: ec,
        ev_discharge: ed,
        battery_soc: bsoc,
        ev_soc: esoc,
        shortfall,
        spill,
    })
}
