//! Synthetic residential instance: daily load and PV shapes, evening EV
//! trips, and bundled market price curves.

use std::f64::consts::PI;

use gridroll_core::model::{
    Battery, Ev, LoadProfile, MicrogridInstance, PvSystem, StorageParams, TimeGrid, Trip, SLOTS_PER_DAY,
    SLOTS_PER_HOUR,
};
use rand::Rng;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub days: usize,
    pub households: usize,
    pub evs: usize,
    pub pv_systems: usize,
    pub battery: StorageParams,
    pub ev: StorageParams,
    /// Trip distance range in km.
    pub trip_km: (f64, f64),
    pub kwh_per_km: f64,
    /// Departure and arrival windows of every trip, in slots.
    pub trip_window_slots: usize,
    pub annual_demand_kwh: f64,
    /// Daily production of the best oriented PV system on a clear day.
    pub pv_daily_peak_kwh: f64,
    /// Grid connection limit per slot and direction, kWh.
    pub grid_capacity: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            days: 3,
            households: 20,
            evs: 15,
            pv_systems: 17,
            battery: StorageParams {
                capacity: 42.0,
                charge_limit: 3.75,
                discharge_limit: 3.75,
                charge_eff: 0.95,
                discharge_eff: 0.95,
                initial_soc: 0.0,
            },
            ev: StorageParams {
                capacity: 58.0,
                charge_limit: 2.75,
                discharge_limit: 2.75,
                charge_eff: 0.95,
                discharge_eff: 0.95,
                initial_soc: 0.0,
            },
            trip_km: (20.0, 70.0),
            kwh_per_km: 0.18,
            trip_window_slots: 2,
            annual_demand_kwh: 3500.0,
            pv_daily_peak_kwh: 11.0,
            grid_capacity: 30.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("trip_km", self.trip_km.0),
            ("kwh_per_km", self.kwh_per_km),
            ("annual_demand_kwh", self.annual_demand_kwh),
            ("pv_daily_peak_kwh", self.pv_daily_peak_kwh),
            ("grid_capacity", self.grid_capacity),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.days == 0 {
            return Err(CliError::Config("days must be at least 1".into()));
        }
        if self.trip_km.1 < self.trip_km.0 {
            return Err(CliError::Config("trip_km range is reversed".into()));
        }
        self.battery.validate("battery preset")?;
        self.ev.validate("EV preset")?;
        Ok(())
    }
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    (-((x - mu) / sigma).powi(2) / 2.0).exp()
}

/// Relative household demand at hour of day `h`.
fn load_shape(h: f64) -> f64 {
    0.25 + 0.55 * gauss(h, 7.5, 1.2) + 0.3 * gauss(h, 12.5, 1.5) + 1.0 * gauss(h, 19.0, 2.0)
}

/// Clear-sky PV shape between 06:00 and 20:00.
fn pv_shape(h: f64) -> f64 {
    if (6.0..20.0).contains(&h) {
        (PI * (h - 6.0) / 14.0).sin().powf(1.5)
    } else {
        0.0
    }
}

/// Day-ahead price shape in EUR/kWh: a mild daily profile with a night
/// valley, morning and evening peaks and a midday dip.
fn price_shape(h: f64) -> f64 {
    let night = gauss(h, 3.0, 2.5) + gauss(h, 27.0, 2.5);
    0.09 - 0.004 * night + 0.004 * gauss(h, 8.0, 1.5) + 0.007 * gauss(h, 19.0, 2.0) - 0.003 * gauss(h, 13.0, 2.0)
}

fn hour_of_day(slot_in_day: usize) -> f64 {
    (slot_in_day as f64 + 0.5) / SLOTS_PER_HOUR as f64
}

/// Scales `values` so they sum to `total`.
fn normalise(values: &mut [f64], total: f64) {
    let sum: f64 = values.iter().sum();
    if sum > 0.0 {
        values.iter_mut().for_each(|v| *v *= total / sum);
    }
}

/// Builds an instance from `spec`; the same generator state gives the same
/// instance.
pub fn generate_synthetic<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<MicrogridInstance, CliError> {
    spec.validate()?;
    let grid = TimeGrid::days(spec.days)?;
    let slots = grid.horizon_slots();
    let mut inst = MicrogridInstance::empty(grid, spec.grid_capacity);

    // prices
    for day in 0..spec.days {
        let level = rng.random_range(0.9..1.1);
        for h in 0..24 {
            let hour = day * 24 + h;
            inst.prices.da_price[hour] = level * price_shape(h as f64 + 0.5) * rng.random_range(0.95..1.05);
        }
    }
    for hour in 0..grid.num_hours() {
        let da = inst.prices.da_price[hour];
        // intraday quotes sit around the day-ahead price; in spike hours
        // selling intraday beats it
        let spike = rng.random_bool(0.08).then(|| rng.random_range(1.2..2.6));
        for t in hour * SLOTS_PER_HOUR..(hour + 1) * SLOTS_PER_HOUR {
            let sell = spike.unwrap_or_else(|| rng.random_range(0.6..0.9));
            inst.prices.id_sell_price[t] = da * sell;
            inst.prices.id_buy_price[t] = da * (sell + 0.01).max(rng.random_range(1.05..1.25));
        }
    }

    // households
    let daily_mean = spec.annual_demand_kwh / 365.0;
    for i in 0..spec.households {
        let shift = rng.random_range(-1.0..1.0);
        let mut load = Vec::with_capacity(slots);
        for _ in 0..spec.days {
            let mut day: Vec<f64> = (0..SLOTS_PER_DAY)
                .map(|k| load_shape(hour_of_day(k) - shift) * rng.random_range(0.8..1.2))
                .collect();
            normalise(&mut day, daily_mean * rng.random_range(0.88..1.04));
            load.extend(day);
        }
        inst.loads.push(LoadProfile { household_id: format!("h{:02}", i + 1), load });
    }

    // PV: clear-sky forecast, orientation scales the daily energy
    let mut unit: Vec<f64> = (0..SLOTS_PER_DAY).map(|k| pv_shape(hour_of_day(k))).collect();
    normalise(&mut unit, 1.0);
    for j in 0..spec.pv_systems {
        let daily = spec.pv_daily_peak_kwh * rng.random_range(0.7..1.0);
        let forecast = (0..slots).map(|t| unit[t % SLOTS_PER_DAY] * daily).collect();
        inst.pv.push(PvSystem { system_id: format!("pv{:02}", j + 1), forecast });
    }

    inst.batteries.push(Battery { id: "battery".into(), params: spec.battery });

    // one evening trip per EV and day
    let w = spec.trip_window_slots;
    for e in 0..spec.evs {
        let trips = (0..spec.days)
            .map(|day| {
                let depart = day * SLOTS_PER_DAY + rng.random_range(64..80);
                let km = rng.random_range(spec.trip_km.0..=spec.trip_km.1);
                // back before midnight, late arrival included
                let latest = (day + 1) * SLOTS_PER_DAY - w - 1;
                Trip {
                    depart_slot: depart,
                    arrive_slot: (depart + 2 * w + rng.random_range(4..12)).min(latest),
                    depart_window: w,
                    arrive_window: w,
                    demand: km * spec.kwh_per_km,
                }
            })
            .collect();
        inst.evs.push(Ev { id: format!("ev{:02}", e + 1), params: spec.ev, trips });
    }
    inst.validate()?;
    Ok(inst)
}
