use std::ops::Range;

use super::{support_budget, DynamicPvRamp, InfoState, ScenarioConfig};
use crate::model::{DemandBooking, MicrogridInstance, RowKey, VarKey, WindowLp};
use crate::RobustError;

/// How the load-budget protection is written into the balance rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProtectionForm {
    /// Auxiliary `z_t`, `w_{i,t}` columns and one row per household.
    #[default]
    Dual,
    /// The protection value is added to the right-hand side directly.
    ClosedForm,
}

/// Worst-case usable PV of one system in slot `t` seen from `info.now`.
///
/// The set is centred on the short-term forecast, which moves from the
/// long-term value towards the realization as the lead time shrinks, and its
/// half-width shrinks with the ramp. Without a realization the centre stays
/// at the long-term forecast.
pub fn pv_bound(
    forecast: f64,
    scenario: &ScenarioConfig,
    gamma_pv: f64,
    ramp: &DynamicPvRamp,
    lead: usize,
    u: Option<f64>,
) -> f64 {
    let r = ramp.reduction(lead);
    let a = scenario.alpha_pv;
    let centre = forecast * (1.0 + a * u.unwrap_or(0.0) * (1.0 - r));
    let half_width = forecast * a * r * gamma_pv.min(1.0);
    (centre - half_width).max(0.0)
}

/// Pessimistic EV plan for a window: unobserved trips block the EV on
/// `[depart - wd, arrive + wa)` and book the worst-case demand at the last
/// blocked slot, or at the last window slot when the trip outlasts the window.
/// The EV may be back at any blocked slot after `arrive - wa`, so the demand
/// must be covered before charging can resume. Without an arrival window the
/// booking stays at the arrival slot. Trips whose arrival has been observed
/// are already settled.
pub fn ev_window_plan(
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    info: &InfoState<'_>,
    ev: usize,
    window: &Range<usize>,
) -> (Vec<bool>, Vec<DemandBooking>) {
    let mut away = vec![false; window.len()];
    let mut bookings = Vec::new();
    for (k, trip) in instance.evs[ev].trips.iter().enumerate() {
        if info.arrival_observed(instance, ev, k) {
            continue;
        }
        let (wd, wa) = scenario.trip_windows(trip);
        let start = trip.depart_slot.saturating_sub(wd);
        let end = trip.arrive_slot + wa;
        if end < window.start || start >= window.end {
            continue;
        }
        for t in start.max(window.start)..end.min(window.end) {
            away[t - window.start] = true;
        }
        let kwh = trip.demand * (1.0 + scenario.alpha_ev);
        let slot = if wa > 0 { end - 1 } else { end };
        bookings.push(DemandBooking { trip: k, slot: slot.clamp(window.start, window.end - 1), kwh });
    }
    (away, bookings)
}

pub fn robustify_window(
    lp: &WindowLp,
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    info: &InfoState<'_>,
) -> Result<WindowLp, RobustError> {
    robustify_window_with(lp, instance, scenario, ramp, info, ProtectionForm::Dual)
}

/// Robust counterpart of a deterministic window LP.
///
/// Every feasible point stays feasible for all load deviations in the
/// budget set, PV inside its forecast set, EV demand and trip times inside
/// their boxes. Prices move to their worst case: buy legs up, sell legs down.
pub fn robustify_window_with(
    lp: &WindowLp,
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    info: &InfoState<'_>,
    form: ProtectionForm,
) -> Result<WindowLp, RobustError> {
    let horizon = instance.grid.horizon_slots();
    if info.now >= horizon || info.now != lp.window.start {
        return Err(RobustError::InconsistentInfo { now: info.now, window_start: lp.window.start, horizon });
    }
    scenario.validate(instance)?;
    let window = lp.window.clone();
    let mut out = lp.clone();

    // prices
    let buy_up = 1.0 + scenario.alpha_da;
    let sell_down = 1.0 - scenario.alpha_da;
    let id_up = 1.0 + scenario.alpha_id;
    let id_down = 1.0 - scenario.alpha_id;
    for (j, key) in lp.col_keys.iter().enumerate() {
        let factor = match key {
            VarKey::DaBuy(_) => buy_up,
            VarKey::DaSell(_) => sell_down,
            VarKey::IdBuy(_) => id_up,
            VarKey::IdSell(_) => id_down,
            _ => continue,
        };
        out.lp.objective[j] *= factor;
    }

    // PV forecast sets
    let gamma_pv = scenario.gamma_pv_for(instance.pv.len());
    for (p, system) in instance.pv.iter().enumerate() {
        for t in window.clone() {
            let j = out.col(VarKey::Pv(p, t)).expect("PV column in window");
            let u = info.realization.map(|r| r.u_pv[p][t]);
            out.lp.upper[j] = pv_bound(system.forecast[t], scenario, gamma_pv, ramp, t - info.now, u);
        }
    }

    // EV availability, worst-case demand, and SoC headroom for low demand
    for (e, ev) in instance.evs.iter().enumerate() {
        let (away, bookings) = ev_window_plan(instance, scenario, info, e, &window);
        let p = &ev.params;
        for t in window.clone() {
            let home = !away[t - window.start];
            let c = out.col(VarKey::EvCharge(e, t)).expect("EV column");
            let d = out.col(VarKey::EvDischarge(e, t)).expect("EV column");
            out.lp.upper[c] = if home { p.charge_limit } else { 0.0 };
            out.lp.upper[d] = if home { p.discharge_limit } else { 0.0 };
        }
        let booked_at = |list: &[DemandBooking], t: usize| -> f64 {
            list.iter().filter(|b| b.slot == t).map(|b| b.kwh).sum()
        };
        for t in window.clone() {
            let delta = booked_at(&lp.ev_bookings[e], t) - booked_at(&bookings, t);
            if delta != 0.0 {
                let i = out.row(RowKey::EvSoc(e, t)).expect("EV SoC row");
                out.lp.rows[i].rhs += delta;
            }
        }
        if scenario.alpha_ev > 0.0 {
            for t in window.clone() {
                let slack: f64 = bookings
                    .iter()
                    .filter(|b| b.slot <= t)
                    .map(|b| 2.0 * scenario.alpha_ev * instance.evs[e].trips[b.trip].demand)
                    .sum();
                let j = out.col(VarKey::EvSoc(e, t)).expect("EV SoC column");
                out.lp.upper[j] = (p.capacity - slack).max(0.0);
            }
        }
        out.ev_bookings[e] = bookings;
    }

    // load budget protection on the balance rows
    let gamma = scenario.gamma_load_for(instance.loads.len());
    for t in window.clone() {
        let deviations: Vec<f64> = instance.loads.iter().map(|l| l.load[t] * scenario.alpha_load).collect();
        if gamma == 0.0 || deviations.iter().all(|d| *d == 0.0) {
            continue;
        }
        let balance = out.row(RowKey::Balance(t)).expect("balance row");
        match form {
            ProtectionForm::ClosedForm => {
                out.lp.rows[balance].rhs += support_budget(&deviations, gamma)?;
            }
            ProtectionForm::Dual => {
                let z = out.add_col(VarKey::ProtZ(t), 0.0, 0.0, f64::INFINITY);
                out.lp.rows[balance].coeffs.push((z, -gamma));
                for (i, &dev) in deviations.iter().enumerate() {
                    let w = out.add_col(VarKey::ProtW(i, t), 0.0, 0.0, f64::INFINITY);
                    out.lp.rows[balance].coeffs.push((w, -1.0));
                    out.add_row(RowKey::Protection(i, t), vec![(z, 1.0), (w, 1.0)], gridroll_solver::Sense::Ge, dev);
                }
            }
        }
    }
    Ok(out)
}
