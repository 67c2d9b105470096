use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use gridroll_solver::{LpSolution, Sense, StandardFormLp};

use super::types::{DecisionSet, MarketPrices, MicrogridInstance, SLOTS_PER_HOUR};
use crate::ModelError;

const QUARTER: f64 = 1.0 / SLOTS_PER_HOUR as f64;
const FIX_TOL: f64 = 1e-9;

/// Identifies one LP column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    DaBuy(usize),
    DaSell(usize),
    IdBuy(usize),
    IdSell(usize),
    Pv(usize, usize),
    BatCharge(usize, usize),
    BatDischarge(usize, usize),
    BatSoc(usize, usize),
    EvCharge(usize, usize),
    EvDischarge(usize, usize),
    EvSoc(usize, usize),
    /// Budget dual multiplier of the load protection at a slot.
    ProtZ(usize),
    /// Per-household dual variable of the load protection.
    ProtW(usize, usize),
}

/// Identifies one LP row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKey {
    Balance(usize),
    GridBuy(usize),
    GridSell(usize),
    BatSoc(usize, usize),
    BatTerminal(usize),
    EvSoc(usize, usize),
    /// `z_t + w_{i,t} >= p_i * alpha`
    Protection(usize, usize),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKey::DaBuy(h) => write!(f, "da_buy_h{h}"),
            VarKey::DaSell(h) => write!(f, "da_sell_h{h}"),
            VarKey::IdBuy(t) => write!(f, "id_buy_{t}"),
            VarKey::IdSell(t) => write!(f, "id_sell_{t}"),
            VarKey::Pv(j, t) => write!(f, "pv{j}_{t}"),
            VarKey::BatCharge(k, t) => write!(f, "bat{k}_c_{t}"),
            VarKey::BatDischarge(k, t) => write!(f, "bat{k}_d_{t}"),
            VarKey::BatSoc(k, t) => write!(f, "bat{k}_soc_{t}"),
            VarKey::EvCharge(h, t) => write!(f, "ev{h}_c_{t}"),
            VarKey::EvDischarge(h, t) => write!(f, "ev{h}_d_{t}"),
            VarKey::EvSoc(h, t) => write!(f, "ev{h}_soc_{t}"),
            VarKey::ProtZ(t) => write!(f, "prot_z_{t}"),
            VarKey::ProtW(i, t) => write!(f, "prot_w{i}_{t}"),
        }
    }
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKey::Balance(t) => write!(f, "balance_{t}"),
            RowKey::GridBuy(t) => write!(f, "grid_buy_{t}"),
            RowKey::GridSell(t) => write!(f, "grid_sell_{t}"),
            RowKey::BatSoc(k, t) => write!(f, "bat{k}_soc_{t}"),
            RowKey::BatTerminal(k) => write!(f, "bat{k}_terminal"),
            RowKey::EvSoc(h, t) => write!(f, "ev{h}_soc_{t}"),
            RowKey::Protection(i, t) => write!(f, "prot{i}_{t}"),
        }
    }
}

/// Values pinned before a window is built: submitted day-ahead positions and
/// the state of charge every storage device starts the window with.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFixings {
    /// Per hour, `Some((buy, sell))` once submitted.
    pub day_ahead: Vec<Option<(f64, f64)>>,
    pub battery_soc: Vec<f64>,
    pub ev_soc: Vec<f64>,
}

impl WindowFixings {
    /// Nothing submitted yet, every device at its initial SoC.
    pub fn initial(instance: &MicrogridInstance) -> Self {
        Self {
            day_ahead: vec![None; instance.grid.num_hours()],
            battery_soc: instance.batteries.iter().map(|b| b.params.initial_soc).collect(),
            ev_soc: instance.evs.iter().map(|e| e.params.initial_soc).collect(),
        }
    }

    /// Same as [`initial`](Self::initial) with every day-ahead hour pinned to zero.
    pub fn without_day_ahead(instance: &MicrogridInstance) -> Self {
        Self {
            day_ahead: vec![Some((0.0, 0.0)); instance.grid.num_hours()],
            ..Self::initial(instance)
        }
    }
}

/// EV demand booked in a SoC row of the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandBooking {
    pub trip: usize,
    pub slot: usize,
    pub kwh: f64,
}

/// A window LP plus the key maps needed to edit it and read solutions back.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowLp {
    pub lp: StandardFormLp,
    pub window: Range<usize>,
    pub col_keys: Vec<VarKey>,
    pub row_keys: Vec<RowKey>,
    col_index: HashMap<VarKey, usize>,
    row_index: HashMap<RowKey, usize>,
    /// Per EV, the trip demand currently subtracted in its SoC rows.
    pub ev_bookings: Vec<Vec<DemandBooking>>,
    /// Fixed day-ahead quantities delivered in each window slot, (buy, sell).
    pub fixed_da_slot: Vec<(f64, f64)>,
}

impl WindowLp {
    fn new(window: Range<usize>) -> Self {
        Self {
            lp: StandardFormLp::new(),
            window,
            col_keys: Vec::new(),
            row_keys: Vec::new(),
            col_index: HashMap::new(),
            row_index: HashMap::new(),
            ev_bookings: Vec::new(),
            fixed_da_slot: Vec::new(),
        }
    }

    pub fn add_col(&mut self, key: VarKey, cost: f64, lower: f64, upper: f64) -> usize {
        let j = self.lp.add_col(cost, lower, upper);
        let previous = self.col_index.insert(key, j);
        debug_assert!(previous.is_none(), "duplicate column {key}");
        self.col_keys.push(key);
        j
    }

    pub fn add_row(&mut self, key: RowKey, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        let i = self.lp.add_row(coeffs, sense, rhs);
        let previous = self.row_index.insert(key, i);
        debug_assert!(previous.is_none(), "duplicate row {key}");
        self.row_keys.push(key);
        i
    }

    pub fn col(&self, key: VarKey) -> Option<usize> {
        self.col_index.get(&key).copied()
    }

    pub fn row(&self, key: RowKey) -> Option<usize> {
        self.row_index.get(&key).copied()
    }

    pub fn value(&self, values: &[f64], key: VarKey) -> Option<f64> {
        self.col(key).map(|j| values[j])
    }

    /// Removes one row, keeping the key maps consistent.
    pub fn drop_row(&mut self, key: RowKey) -> bool {
        let Some(i) = self.row_index.remove(&key) else {
            return false;
        };
        self.lp.rows.remove(i);
        self.row_keys.remove(i);
        for idx in self.row_index.values_mut() {
            if *idx > i {
                *idx -= 1;
            }
        }
        true
    }

    pub fn col_names(&self) -> Vec<String> {
        self.col_keys.iter().map(|k| k.to_string()).collect()
    }

    pub fn row_names(&self) -> Vec<String> {
        self.row_keys.iter().map(|k| k.to_string()).collect()
    }

    /// Copies the window part of an optimal solution into `into`. Free
    /// day-ahead hours are written as well.
    pub fn extract(&self, solution: &LpSolution, into: &mut DecisionSet) {
        let x = &solution.values;
        for (j, key) in self.col_keys.iter().enumerate() {
            let v = x[j].max(0.0);
            match *key {
                VarKey::DaBuy(h) => into.da_buy[h] = v,
                VarKey::DaSell(h) => into.da_sell[h] = v,
                VarKey::IdBuy(t) => into.id_buy[t] = v,
                VarKey::IdSell(t) => into.id_sell[t] = v,
                VarKey::Pv(p, t) => into.pv_used[p][t] = v,
                VarKey::BatCharge(k, t) => into.bat_charge[k][t] = v,
                VarKey::BatDischarge(k, t) => into.bat_discharge[k][t] = v,
                VarKey::EvCharge(h, t) => into.ev_charge[h][t] = v,
                VarKey::EvDischarge(h, t) => into.ev_discharge[h][t] = v,
                VarKey::BatSoc(..) | VarKey::EvSoc(..) | VarKey::ProtZ(_) | VarKey::ProtW(..) => {}
            }
        }
    }
}

/// Nominal availability and demand placement of one EV inside a window.
struct EvWindowPlan {
    pub away: Vec<bool>,
    pub bookings: Vec<DemandBooking>,
}

/// Nominal plan: away on `[depart, arrive)`, demand at `arrive`, or at the
/// last window slot for trips still running when the window closes.
fn nominal_ev_plan(instance: &MicrogridInstance, ev: usize, window: &Range<usize>) -> EvWindowPlan {
    let len = window.len();
    let mut away = vec![false; len];
    let mut bookings = Vec::new();
    for (k, trip) in instance.evs[ev].trips.iter().enumerate() {
        if trip.arrive_slot < window.start || trip.depart_slot >= window.end {
            continue;
        }
        for t in trip.depart_slot.max(window.start)..trip.arrive_slot.min(window.end) {
            away[t - window.start] = true;
        }
        bookings.push(DemandBooking { trip: k, slot: trip.arrive_slot.min(window.end - 1), kwh: trip.demand });
    }
    EvWindowPlan { away, bookings }
}

/// Assembles the deterministic model restricted to `window`.
///
/// Day-ahead hours pinned in `fixed` become constants; the rest become
/// hourly variables, which must lie entirely inside the window.
pub fn build_deterministic_window(
    instance: &MicrogridInstance,
    window: Range<usize>,
    fixed: &WindowFixings,
) -> Result<WindowLp, ModelError> {
    let horizon = instance.grid.horizon_slots();
    if window.start >= window.end || window.end > horizon {
        return Err(ModelError::WindowOutsideHorizon { start: window.start, end: window.end, horizon });
    }
    let hours = instance.grid.num_hours();
    if fixed.day_ahead.len() != hours
        || fixed.battery_soc.len() != instance.batteries.len()
        || fixed.ev_soc.len() != instance.evs.len()
    {
        return Err(ModelError::Invalid("fixings do not match the instance dimensions".into()));
    }
    let cap = instance.grid_capacity;
    for (hour, entry) in fixed.day_ahead.iter().enumerate() {
        if let Some((buy, sell)) = *entry {
            for value in [buy, sell] {
                if !(value >= -FIX_TOL && value * QUARTER <= cap + FIX_TOL) {
                    return Err(ModelError::FixedDayAheadExceedsGrid { hour, value, capacity: cap });
                }
            }
        }
    }
    let devices = instance
        .batteries
        .iter()
        .map(|b| (&b.id, b.params.capacity))
        .zip(&fixed.battery_soc)
        .chain(instance.evs.iter().map(|e| (&e.id, e.params.capacity)).zip(&fixed.ev_soc));
    for ((id, capacity), &soc) in devices {
        if !(soc >= -FIX_TOL && soc <= capacity + FIX_TOL) {
            return Err(ModelError::FixedSocOutOfRange { device: id.clone(), soc, capacity });
        }
    }

    let first_hour = window.start / SLOTS_PER_HOUR;
    let last_hour = (window.end - 1) / SLOTS_PER_HOUR;
    let mut w = WindowLp::new(window.clone());
    let prices = &instance.prices;

    for h in first_hour..=last_hour {
        if fixed.day_ahead[h].is_none() {
            let hour_slots = h * SLOTS_PER_HOUR..(h + 1) * SLOTS_PER_HOUR;
            if hour_slots.start < window.start || hour_slots.end > window.end {
                return Err(ModelError::DayAheadHourSplit { hour: h });
            }
            w.add_col(VarKey::DaBuy(h), prices.da_price[h], 0.0, cap * SLOTS_PER_HOUR as f64);
            w.add_col(VarKey::DaSell(h), -prices.da_price[h], 0.0, cap * SLOTS_PER_HOUR as f64);
        }
    }

    for t in window.clone() {
        let h = t / SLOTS_PER_HOUR;
        let (fixed_buy, fixed_sell) = fixed.day_ahead[h].map_or((0.0, 0.0), |(b, s)| (b * QUARTER, s * QUARTER));
        w.fixed_da_slot.push((fixed_buy, fixed_sell));
        let buy_room = (cap - fixed_buy).max(0.0);
        let sell_room = (cap - fixed_sell).max(0.0);
        let id_buy = w.add_col(VarKey::IdBuy(t), prices.id_buy_price[t], 0.0, buy_room);
        let id_sell = w.add_col(VarKey::IdSell(t), -prices.id_sell_price[t], 0.0, sell_room);
        for (p, pv) in instance.pv.iter().enumerate() {
            w.add_col(VarKey::Pv(p, t), 0.0, 0.0, pv.forecast[t]);
        }
        if fixed.day_ahead[h].is_none() {
            let da_buy = w.col(VarKey::DaBuy(h)).expect("free hour column");
            let da_sell = w.col(VarKey::DaSell(h)).expect("free hour column");
            w.add_row(RowKey::GridBuy(t), vec![(da_buy, QUARTER), (id_buy, 1.0)], Sense::Le, cap);
            w.add_row(RowKey::GridSell(t), vec![(da_sell, QUARTER), (id_sell, 1.0)], Sense::Le, cap);
        }
    }

    let end_is_horizon = window.end == horizon;
    for (k, battery) in instance.batteries.iter().enumerate() {
        let p = &battery.params;
        let mut prev_soc: Option<usize> = None;
        for t in window.clone() {
            let c = w.add_col(VarKey::BatCharge(k, t), 0.0, 0.0, p.charge_limit);
            let d = w.add_col(VarKey::BatDischarge(k, t), 0.0, 0.0, p.discharge_limit);
            let soc = w.add_col(VarKey::BatSoc(k, t), 0.0, 0.0, p.capacity);
            let mut coeffs = vec![(soc, 1.0), (c, -p.charge_eff), (d, 1.0 / p.discharge_eff)];
            let rhs = match prev_soc {
                Some(prev) => {
                    coeffs.push((prev, -1.0));
                    0.0
                }
                None => fixed.battery_soc[k].clamp(0.0, p.capacity),
            };
            w.add_row(RowKey::BatSoc(k, t), coeffs, Sense::Eq, rhs);
            prev_soc = Some(soc);
        }
        if end_is_horizon {
            let last = prev_soc.expect("non-empty window");
            w.add_row(RowKey::BatTerminal(k), vec![(last, 1.0)], Sense::Eq, p.initial_soc);
        }
    }

    for (e, ev) in instance.evs.iter().enumerate() {
        let p = &ev.params;
        let plan = nominal_ev_plan(instance, e, &window);
        let mut prev_soc: Option<usize> = None;
        for t in window.clone() {
            let home = !plan.away[t - window.start];
            let c = w.add_col(VarKey::EvCharge(e, t), 0.0, 0.0, if home { p.charge_limit } else { 0.0 });
            let d = w.add_col(VarKey::EvDischarge(e, t), 0.0, 0.0, if home { p.discharge_limit } else { 0.0 });
            let soc = w.add_col(VarKey::EvSoc(e, t), 0.0, 0.0, p.capacity);
            let demand: f64 = plan.bookings.iter().filter(|b| b.slot == t).map(|b| b.kwh).sum();
            let mut coeffs = vec![(soc, 1.0), (c, -p.charge_eff), (d, 1.0 / p.discharge_eff)];
            let rhs = match prev_soc {
                Some(prev) => {
                    coeffs.push((prev, -1.0));
                    -demand
                }
                None => fixed.ev_soc[e].clamp(0.0, p.capacity) - demand,
            };
            w.add_row(RowKey::EvSoc(e, t), coeffs, Sense::Eq, rhs);
            prev_soc = Some(soc);
        }
        w.ev_bookings.push(plan.bookings);
    }

    // balance last so its supply terms can reference every device column
    for t in window.clone() {
        let h = t / SLOTS_PER_HOUR;
        let (fixed_buy, fixed_sell) = w.fixed_da_slot[t - window.start];
        let mut coeffs = Vec::new();
        if let (Some(b), Some(s)) = (w.col(VarKey::DaBuy(h)), w.col(VarKey::DaSell(h))) {
            coeffs.push((b, QUARTER));
            coeffs.push((s, -QUARTER));
        }
        coeffs.push((w.col(VarKey::IdBuy(t)).expect("slot column"), 1.0));
        coeffs.push((w.col(VarKey::IdSell(t)).expect("slot column"), -1.0));
        for p in 0..instance.pv.len() {
            coeffs.push((w.col(VarKey::Pv(p, t)).expect("slot column"), 1.0));
        }
        for k in 0..instance.batteries.len() {
            coeffs.push((w.col(VarKey::BatDischarge(k, t)).expect("slot column"), 1.0));
            coeffs.push((w.col(VarKey::BatCharge(k, t)).expect("slot column"), -1.0));
        }
        for e in 0..instance.evs.len() {
            coeffs.push((w.col(VarKey::EvDischarge(e, t)).expect("slot column"), 1.0));
            coeffs.push((w.col(VarKey::EvCharge(e, t)).expect("slot column"), -1.0));
        }
        let rhs = instance.total_load(t) - fixed_buy + fixed_sell;
        w.add_row(RowKey::Balance(t), coeffs, Sense::Ge, rhs);
    }
    Ok(w)
}

/// Realized cost of the final decisions: day-ahead positions at hourly
/// prices, intraday positions at slot prices.
pub fn evaluate_actual_cost(decisions: &DecisionSet, realized: &MarketPrices) -> Result<f64, ModelError> {
    let slots = realized.id_buy_price.len();
    let hours = realized.da_price.len();
    if decisions.da_buy.len() != hours || decisions.da_sell.len() != hours {
        return Err(ModelError::CoverageGap { slot: decisions.da_buy.len().min(decisions.da_sell.len()) * SLOTS_PER_HOUR });
    }
    if decisions.id_buy.len() != slots || decisions.id_sell.len() != slots {
        return Err(ModelError::CoverageGap { slot: decisions.id_buy.len().min(decisions.id_sell.len()) });
    }
    let mut cost = 0.0;
    for h in 0..hours {
        let (b, s) = (decisions.da_buy[h], decisions.da_sell[h]);
        if !b.is_finite() || !s.is_finite() {
            return Err(ModelError::CoverageGap { slot: h * SLOTS_PER_HOUR });
        }
        cost += realized.da_price[h] * (b - s);
    }
    for t in 0..slots {
        let (b, s) = (decisions.id_buy[t], decisions.id_sell[t]);
        if !b.is_finite() || !s.is_finite() {
            return Err(ModelError::CoverageGap { slot: t });
        }
        cost += realized.id_buy_price[t] * b - realized.id_sell_price[t] * s;
    }
    Ok(cost)
}
