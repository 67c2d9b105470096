use crate::ModelError;

pub const SLOTS_PER_HOUR: usize = 4;
pub const SLOTS_PER_DAY: usize = 96;
/// Noon, counted in slots from midnight.
pub const NOON_OFFSET: usize = SLOTS_PER_DAY / 2;

/// 15-minute discretization of a whole number of days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    horizon_slots: usize,
}

impl TimeGrid {
    pub fn new(horizon_slots: usize) -> Result<Self, ModelError> {
        if horizon_slots == 0 || horizon_slots % SLOTS_PER_DAY != 0 {
            return Err(ModelError::Invalid(format!(
                "horizon of {horizon_slots} slots is not a positive multiple of {SLOTS_PER_DAY}"
            )));
        }
        Ok(Self { horizon_slots })
    }

    pub fn days(days: usize) -> Result<Self, ModelError> {
        Self::new(days * SLOTS_PER_DAY)
    }

    pub fn horizon_slots(&self) -> usize {
        self.horizon_slots
    }

    pub fn slots_per_hour(&self) -> usize {
        SLOTS_PER_HOUR
    }

    pub fn slots_per_day(&self) -> usize {
        SLOTS_PER_DAY
    }

    pub fn num_hours(&self) -> usize {
        self.horizon_slots / SLOTS_PER_HOUR
    }

    pub fn num_days(&self) -> usize {
        self.horizon_slots / SLOTS_PER_DAY
    }

    pub fn hour_of(&self, slot: usize) -> usize {
        slot / SLOTS_PER_HOUR
    }

    pub fn day_of(&self, slot: usize) -> usize {
        slot / SLOTS_PER_DAY
    }

    pub fn noon(&self, day: usize) -> usize {
        day * SLOTS_PER_DAY + NOON_OFFSET
    }

    /// Slot 0 (bootstrap for day 1) plus the noon of every day whose
    /// following day lies inside the horizon.
    pub fn day_ahead_submission_slots(&self) -> Vec<usize> {
        let mut slots = vec![0];
        slots.extend((0..self.num_days() - 1).map(|d| self.noon(d)));
        slots
    }
}

/// Market prices in money per kWh. Day-ahead is hourly, intraday per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPrices {
    pub da_price: Vec<f64>,
    pub id_buy_price: Vec<f64>,
    pub id_sell_price: Vec<f64>,
}

impl MarketPrices {
    pub fn validate(&self, grid: &TimeGrid) -> Result<(), ModelError> {
        if self.da_price.len() != grid.num_hours() {
            return Err(ModelError::Invalid(format!(
                "day-ahead prices cover {} hours, horizon has {}",
                self.da_price.len(),
                grid.num_hours()
            )));
        }
        for (name, series) in [("intraday buy", &self.id_buy_price), ("intraday sell", &self.id_sell_price)] {
            if series.len() != grid.horizon_slots() {
                return Err(ModelError::Invalid(format!(
                    "{name} prices cover {} slots, horizon has {}",
                    series.len(),
                    grid.horizon_slots()
                )));
            }
        }
        let all = self.da_price.iter().chain(&self.id_buy_price).chain(&self.id_sell_price);
        if let Some(bad) = all.into_iter().find(|p| !p.is_finite()) {
            return Err(ModelError::Invalid(format!("non-finite price {bad}")));
        }
        Ok(())
    }
}

/// Predicted inflexible demand of one household, kWh per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub household_id: String,
    pub load: Vec<f64>,
}

/// Long-term PV forecast made at slot 0, kWh per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PvSystem {
    pub system_id: String,
    pub forecast: Vec<f64>,
}

/// Storage parameters shared by stationary batteries and EVs. Energies are
/// kWh, limits kWh per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageParams {
    pub capacity: f64,
    pub charge_limit: f64,
    pub discharge_limit: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    pub initial_soc: f64,
}

impl StorageParams {
    pub fn validate(&self, what: &str) -> Result<(), ModelError> {
        let finite = [
            self.capacity,
            self.charge_limit,
            self.discharge_limit,
            self.charge_eff,
            self.discharge_eff,
            self.initial_soc,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(ModelError::Invalid(format!("{what}: non-finite parameter")));
        }
        if self.capacity < 0.0 || self.charge_limit < 0.0 || self.discharge_limit < 0.0 {
            return Err(ModelError::Invalid(format!("{what}: negative capacity or limit")));
        }
        for eff in [self.charge_eff, self.discharge_eff] {
            if !(eff > 0.0 && eff <= 1.0) {
                return Err(ModelError::Invalid(format!("{what}: efficiency {eff} outside (0, 1]")));
            }
        }
        if self.initial_soc < 0.0 || self.initial_soc > self.capacity {
            return Err(ModelError::Invalid(format!(
                "{what}: initial SoC {} outside [0, {}]",
                self.initial_soc, self.capacity
            )));
        }
        Ok(())
    }

    /// SoC change for one slot of charging `c` and discharging `d`.
    pub fn soc_delta(&self, c: f64, d: f64) -> f64 {
        self.charge_eff * c - d / self.discharge_eff
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub id: String,
    pub params: StorageParams,
}

/// One trip. The EV is away on `[depart_slot, arrive_slot)` and its energy
/// use is booked at `arrive_slot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trip {
    pub depart_slot: usize,
    pub arrive_slot: usize,
    /// Half-width in slots of the departure-time box.
    pub depart_window: usize,
    pub arrive_window: usize,
    pub demand: f64,
}

impl Trip {
    /// Away interval when both boundaries land at their worst case.
    pub fn pessimistic_away(&self) -> (usize, usize) {
        (
            self.depart_slot.saturating_sub(self.depart_window),
            self.arrive_slot + self.arrive_window,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ev {
    pub id: String,
    pub params: StorageParams,
    pub trips: Vec<Trip>,
}

impl Ev {
    pub fn validate(&self, horizon: usize) -> Result<(), ModelError> {
        let what = format!("EV {}", self.id);
        self.params.validate(&what)?;
        let mut previous_end: Option<usize> = None;
        for (k, trip) in self.trips.iter().enumerate() {
            if trip.depart_slot >= trip.arrive_slot {
                return Err(ModelError::Invalid(format!(
                    "{what} trip {k}: arrival slot {} is not after departure slot {}",
                    trip.arrive_slot, trip.depart_slot
                )));
            }
            if !trip.demand.is_finite() || trip.demand < 0.0 {
                return Err(ModelError::Invalid(format!("{what} trip {k}: negative demand")));
            }
            if trip.depart_slot + trip.depart_window >= trip.arrive_slot.saturating_sub(trip.arrive_window) {
                return Err(ModelError::Invalid(format!(
                    "{what} trip {k}: departure and arrival windows overlap"
                )));
            }
            if trip.depart_window > trip.depart_slot || trip.arrive_slot + trip.arrive_window >= horizon {
                return Err(ModelError::Invalid(format!(
                    "{what} trip {k}: pessimistic away interval leaves the horizon"
                )));
            }
            let (start, end) = trip.pessimistic_away();
            if let Some(prev) = previous_end {
                if start <= prev {
                    return Err(ModelError::Invalid(format!(
                        "{what} trip {k} overlaps the previous trip"
                    )));
                }
            }
            previous_end = Some(end);
        }
        Ok(())
    }
}

/// All physical and market data for one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct MicrogridInstance {
    pub grid: TimeGrid,
    pub prices: MarketPrices,
    pub loads: Vec<LoadProfile>,
    pub pv: Vec<PvSystem>,
    pub batteries: Vec<Battery>,
    pub evs: Vec<Ev>,
    /// Line capacity to the main grid, kWh per slot.
    pub grid_capacity: f64,
}

impl MicrogridInstance {
    pub fn validate(&self) -> Result<(), ModelError> {
        let horizon = self.grid.horizon_slots();
        self.prices.validate(&self.grid)?;
        if !(self.grid_capacity > 0.0 && self.grid_capacity.is_finite()) {
            return Err(ModelError::Invalid(format!("grid capacity {} must be positive", self.grid_capacity)));
        }
        for load in &self.loads {
            if load.load.len() != horizon {
                return Err(ModelError::Invalid(format!(
                    "load of household {} covers {} slots, horizon has {horizon}",
                    load.household_id,
                    load.load.len()
                )));
            }
            if let Some(t) = load.load.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(ModelError::Invalid(format!(
                    "load of household {} is negative at slot {t}",
                    load.household_id
                )));
            }
        }
        for pv in &self.pv {
            if pv.forecast.len() != horizon {
                return Err(ModelError::Invalid(format!(
                    "PV system {} covers {} slots, horizon has {horizon}",
                    pv.system_id,
                    pv.forecast.len()
                )));
            }
            if let Some(t) = pv.forecast.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(ModelError::Invalid(format!(
                    "PV forecast of system {} is negative at slot {t}",
                    pv.system_id
                )));
            }
        }
        for battery in &self.batteries {
            battery.params.validate(&format!("battery {}", battery.id))?;
        }
        for ev in &self.evs {
            ev.validate(horizon)?;
        }
        Ok(())
    }

    pub fn total_load(&self, slot: usize) -> f64 {
        self.loads.iter().map(|l| l.load[slot]).sum()
    }

    pub fn total_pv_forecast(&self, slot: usize) -> f64 {
        self.pv.iter().map(|p| p.forecast[slot]).sum()
    }

    /// Instance with the given horizon, flat prices and no devices.
    pub fn empty(grid: TimeGrid, grid_capacity: f64) -> Self {
        Self {
            grid,
            prices: MarketPrices {
                da_price: vec![0.0; grid.num_hours()],
                id_buy_price: vec![0.0; grid.horizon_slots()],
                id_sell_price: vec![0.0; grid.horizon_slots()],
            },
            loads: Vec::new(),
            pv: Vec::new(),
            batteries: Vec::new(),
            evs: Vec::new(),
            grid_capacity,
        }
    }
}

/// Market and device actions. Day-ahead quantities are hourly totals that
/// spread evenly over the four slots of their hour.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    pub da_buy: Vec<f64>,
    pub da_sell: Vec<f64>,
    pub id_buy: Vec<f64>,
    pub id_sell: Vec<f64>,
    /// `[system][slot]`
    pub pv_used: Vec<Vec<f64>>,
    pub bat_charge: Vec<Vec<f64>>,
    pub bat_discharge: Vec<Vec<f64>>,
    pub ev_charge: Vec<Vec<f64>>,
    pub ev_discharge: Vec<Vec<f64>>,
}

impl DecisionSet {
    pub fn zeros(instance: &MicrogridInstance) -> Self {
        let slots = instance.grid.horizon_slots();
        let hours = instance.grid.num_hours();
        Self {
            da_buy: vec![0.0; hours],
            da_sell: vec![0.0; hours],
            id_buy: vec![0.0; slots],
            id_sell: vec![0.0; slots],
            pv_used: vec![vec![0.0; slots]; instance.pv.len()],
            bat_charge: vec![vec![0.0; slots]; instance.batteries.len()],
            bat_discharge: vec![vec![0.0; slots]; instance.batteries.len()],
            ev_charge: vec![vec![0.0; slots]; instance.evs.len()],
            ev_discharge: vec![vec![0.0; slots]; instance.evs.len()],
        }
    }

    pub fn num_slots(&self) -> usize {
        self.id_buy.len()
    }

    /// Day-ahead purchase delivered in `slot`.
    pub fn da_buy_in_slot(&self, slot: usize) -> f64 {
        self.da_buy[slot / SLOTS_PER_HOUR] / SLOTS_PER_HOUR as f64
    }

    pub fn da_sell_in_slot(&self, slot: usize) -> f64 {
        self.da_sell[slot / SLOTS_PER_HOUR] / SLOTS_PER_HOUR as f64
    }

    /// Copies every per-slot decision in `slots` from `other`.
    pub fn copy_slots(&mut self, other: &DecisionSet, slots: std::ops::Range<usize>) {
        let r = slots;
        self.id_buy[r.clone()].copy_from_slice(&other.id_buy[r.clone()]);
        self.id_sell[r.clone()].copy_from_slice(&other.id_sell[r.clone()]);
        for (dst, src) in [
            (&mut self.pv_used, &other.pv_used),
            (&mut self.bat_charge, &other.bat_charge),
            (&mut self.bat_discharge, &other.bat_discharge),
            (&mut self.ev_charge, &other.ev_charge),
            (&mut self.ev_discharge, &other.ev_discharge),
        ] {
            for (d, s) in dst.iter_mut().zip(src) {
                d[r.clone()].copy_from_slice(&s[r.clone()]);
            }
        }
    }
}
