use rand::Rng;

use super::ScenarioConfig;
use crate::model::{MarketPrices, MicrogridInstance, SLOTS_PER_HOUR};

/// `nominal * (1 + alpha * u)`.
pub fn realized_value(nominal: f64, alpha: f64, u: f64) -> f64 {
    nominal * (1.0 + alpha * u)
}

/// One draw of every uncertain quantity, stored as normalized deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    /// `[household][slot]`
    pub u_load: Vec<Vec<f64>>,
    /// `[system][slot]`
    pub u_pv: Vec<Vec<f64>>,
    /// `[ev][trip]`
    pub u_ev_demand: Vec<Vec<f64>>,
    /// `[ev][trip]`, slots added to the nominal departure.
    pub depart_offset: Vec<Vec<i64>>,
    pub arrive_offset: Vec<Vec<i64>>,
    /// Per hour.
    pub u_da: Vec<f64>,
    pub u_id_buy: Vec<f64>,
    pub u_id_sell: Vec<f64>,
}

impl Realization {
    /// Every parameter at its nominal value.
    pub fn nominal(instance: &MicrogridInstance) -> Self {
        let slots = instance.grid.horizon_slots();
        let per_trip = |v| instance.evs.iter().map(|e| vec![v; e.trips.len()]).collect::<Vec<_>>();
        Self {
            u_load: vec![vec![0.0; slots]; instance.loads.len()],
            u_pv: vec![vec![0.0; slots]; instance.pv.len()],
            u_ev_demand: per_trip(0.0),
            depart_offset: instance.evs.iter().map(|e| vec![0; e.trips.len()]).collect(),
            arrive_offset: instance.evs.iter().map(|e| vec![0; e.trips.len()]).collect(),
            u_da: vec![0.0; instance.grid.num_hours()],
            u_id_buy: vec![0.0; slots],
            u_id_sell: vec![0.0; slots],
        }
    }

    pub fn load(&self, instance: &MicrogridInstance, scenario: &ScenarioConfig, household: usize, slot: usize) -> f64 {
        realized_value(instance.loads[household].load[slot], scenario.alpha_load, self.u_load[household][slot])
    }

    pub fn total_load(&self, instance: &MicrogridInstance, scenario: &ScenarioConfig, slot: usize) -> f64 {
        (0..instance.loads.len()).map(|i| self.load(instance, scenario, i, slot)).sum()
    }

    pub fn pv(&self, instance: &MicrogridInstance, scenario: &ScenarioConfig, system: usize, slot: usize) -> f64 {
        realized_value(instance.pv[system].forecast[slot], scenario.alpha_pv, self.u_pv[system][slot])
    }

    pub fn ev_demand(&self, instance: &MicrogridInstance, scenario: &ScenarioConfig, ev: usize, trip: usize) -> f64 {
        realized_value(instance.evs[ev].trips[trip].demand, scenario.alpha_ev, self.u_ev_demand[ev][trip])
    }

    pub fn actual_depart(&self, instance: &MicrogridInstance, ev: usize, trip: usize) -> usize {
        offset_slot(instance.evs[ev].trips[trip].depart_slot, self.depart_offset[ev][trip])
    }

    pub fn actual_arrive(&self, instance: &MicrogridInstance, ev: usize, trip: usize) -> usize {
        offset_slot(instance.evs[ev].trips[trip].arrive_slot, self.arrive_offset[ev][trip])
    }

    pub fn prices(&self, instance: &MicrogridInstance, scenario: &ScenarioConfig) -> MarketPrices {
        let p = &instance.prices;
        MarketPrices {
            da_price: p.da_price.iter().zip(&self.u_da).map(|(&v, &u)| realized_value(v, scenario.alpha_da, u)).collect(),
            id_buy_price: p
                .id_buy_price
                .iter()
                .zip(&self.u_id_buy)
                .map(|(&v, &u)| realized_value(v, scenario.alpha_id, u))
                .collect(),
            id_sell_price: p
                .id_sell_price
                .iter()
                .zip(&self.u_id_sell)
                .map(|(&v, &u)| realized_value(v, scenario.alpha_id, u))
                .collect(),
        }
    }

    /// True when every continuous component lies in `[-1, 1]` and every
    /// time offset inside its window.
    pub fn within_boxes(&self, instance: &MicrogridInstance, scenario: &ScenarioConfig) -> bool {
        let unit = |v: &f64| (-1.0..=1.0).contains(v);
        let continuous = self.u_load.iter().flatten().all(unit)
            && self.u_pv.iter().flatten().all(unit)
            && self.u_ev_demand.iter().flatten().all(unit)
            && self.u_da.iter().all(unit)
            && self.u_id_buy.iter().all(unit)
            && self.u_id_sell.iter().all(unit);
        let times = instance.evs.iter().enumerate().all(|(e, ev)| {
            ev.trips.iter().enumerate().all(|(k, trip)| {
                let (wd, wa) = scenario.trip_windows(trip);
                self.depart_offset[e][k].unsigned_abs() as usize <= wd
                    && self.arrive_offset[e][k].unsigned_abs() as usize <= wa
            })
        });
        continuous && times
    }
}

fn offset_slot(nominal: usize, offset: i64) -> usize {
    (nominal as i64 + offset).max(0) as usize
}

/// Draws every deviation i.i.d. uniform on `[-1, 1]` and every trip-time
/// offset uniformly over the integer slots of its window.
///
/// Draw order is fixed (loads, PV, EV demand, EV times, day-ahead, intraday
/// buy, intraday sell) so equal seeds give equal realizations.
pub fn sample_realization<R: Rng + ?Sized>(
    rng: &mut R,
    instance: &MicrogridInstance,
    scenario: &ScenarioConfig,
) -> Realization {
    let slots = instance.grid.horizon_slots();
    let mut unit = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let u_load = (0..instance.loads.len()).map(|_| unit(slots)).collect();
    let u_pv = (0..instance.pv.len()).map(|_| unit(slots)).collect();
    let u_ev_demand = instance.evs.iter().map(|e| unit(e.trips.len())).collect();
    let mut depart_offset = Vec::new();
    let mut arrive_offset = Vec::new();
    for ev in &instance.evs {
        let mut dep = Vec::new();
        let mut arr = Vec::new();
        for trip in &ev.trips {
            let (wd, wa) = scenario.trip_windows(trip);
            dep.push(rng.random_range(-(wd as i64)..=wd as i64));
            arr.push(rng.random_range(-(wa as i64)..=wa as i64));
        }
        depart_offset.push(dep);
        arrive_offset.push(arr);
    }
    let mut unit = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let u_da = unit(slots / SLOTS_PER_HOUR);
    let u_id_buy = unit(slots);
    let u_id_sell = unit(slots);
    Realization { u_load, u_pv, u_ev_demand, depart_offset, arrive_offset, u_da, u_id_buy, u_id_sell }
}

/// What the operator knows when an iteration starts at `now`.
///
/// Realizations of slots before `now` are observed. The realization of
/// later PV slots feeds the improved short-term forecast only.
#[derive(Debug, Clone, Copy)]
pub struct InfoState<'a> {
    pub now: usize,
    pub realization: Option<&'a Realization>,
}

impl<'a> InfoState<'a> {
    /// Nothing observed and no short-term forecast.
    pub fn blind(now: usize) -> Self {
        Self { now, realization: None }
    }

    pub fn at(now: usize, realization: &'a Realization) -> Self {
        Self { now, realization: Some(realization) }
    }

    pub fn departure_observed(&self, instance: &MicrogridInstance, ev: usize, trip: usize) -> bool {
        self.realization.is_some_and(|r| r.actual_depart(instance, ev, trip) < self.now)
    }

    pub fn arrival_observed(&self, instance: &MicrogridInstance, ev: usize, trip: usize) -> bool {
        self.realization.is_some_and(|r| r.actual_arrive(instance, ev, trip) < self.now)
    }
}
