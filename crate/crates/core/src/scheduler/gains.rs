use crate::model::{MarketPrices, MicrogridInstance};
use crate::robust::{DynamicPvRamp, ScenarioConfig};

/// Value of an iteration at `s` for PV slot `t`: the part of the PV set that
/// the short-term forecast removes, priced at the worst-case sell price.
pub fn compute_v(
    t: usize,
    s: usize,
    pv_total_forecast: f64,
    scenario: &ScenarioConfig,
    ramp: &DynamicPvRamp,
    prices: &MarketPrices,
) -> f64 {
    if s > t || ramp.improved_window_slots == 0 {
        return 0.0;
    }
    let beta = (1.0 - (t - s) as f64 / ramp.improved_window_slots as f64).max(0.0);
    pv_total_forecast * scenario.alpha_pv * beta * prices.id_sell_price[t] * (1.0 - scenario.alpha_id)
}

/// Value of an iteration at `s` for EVs arriving at `t`: their expected
/// surplus over the worst-case demand, sold at the best worst-case sell
/// price still reachable from `s`.
pub fn compute_w(t: usize, s: usize, arrival_demands: &[f64], scenario: &ScenarioConfig, prices: &MarketPrices) -> f64 {
    if s <= t || arrival_demands.is_empty() || s >= prices.id_sell_price.len() {
        return 0.0;
    }
    let best = prices.id_sell_price[s..].iter().fold(0.0_f64, |m, p| m.max(p * (1.0 - scenario.alpha_id)));
    arrival_demands.iter().map(|d| d * scenario.alpha_ev * best).sum()
}

/// Sparse information-gain values. `v[t]` and the rows of `w` hold only
/// nonzero `(s, value)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub horizon: usize,
    pub v: Vec<Vec<(usize, f64)>>,
    /// `(t, entries)` for every slot with at least one arrival.
    pub w: Vec<(usize, Vec<(usize, f64)>)>,
    pub eta: f64,
}

impl GainMatrix {
    pub fn empty(horizon: usize, eta: f64) -> Self {
        Self { horizon, v: vec![Vec::new(); horizon], w: Vec::new(), eta }
    }

    /// Gains over the whole horizon from the long-term forecasts and nominal
    /// trip arrivals.
    pub fn build(instance: &MicrogridInstance, scenario: &ScenarioConfig, ramp: &DynamicPvRamp, eta: f64) -> Self {
        let horizon = instance.grid.horizon_slots();
        let prices = &instance.prices;
        let mut gains = Self::empty(horizon, eta);
        for t in 0..horizon {
            let pv = instance.total_pv_forecast(t);
            let first = (t + 1).saturating_sub(ramp.improved_window_slots);
            for s in first..=t {
                let value = compute_v(t, s, pv, scenario, ramp, prices);
                if value > 0.0 {
                    gains.v[t].push((s, value));
                }
            }
        }
        let mut arrivals: Vec<Vec<f64>> = vec![Vec::new(); horizon];
        for ev in &instance.evs {
            for trip in &ev.trips {
                arrivals[trip.arrive_slot].push(trip.demand);
            }
        }
        // suffix maximum of the discounted sell price
        let mut best_from = vec![0.0_f64; horizon + 1];
        for l in (0..horizon).rev() {
            best_from[l] = best_from[l + 1].max(prices.id_sell_price[l] * (1.0 - scenario.alpha_id));
        }
        for (t, demands) in arrivals.iter().enumerate() {
            if demands.is_empty() {
                continue;
            }
            let surplus: f64 = demands.iter().map(|d| d * scenario.alpha_ev).sum();
            let row: Vec<(usize, f64)> =
                (t + 1..horizon).map(|s| (s, surplus * best_from[s])).filter(|&(_, v)| v > 0.0).collect();
            if !row.is_empty() {
                gains.w.push((t, row));
            }
        }
        gains
    }

    pub fn v_at(&self, t: usize, s: usize) -> f64 {
        self.v[t].iter().find(|e| e.0 == s).map_or(0.0, |e| e.1)
    }

    pub fn w_at(&self, t: usize, s: usize) -> f64 {
        self.w.iter().find(|r| r.0 == t).and_then(|r| r.1.iter().find(|e| e.0 == s)).map_or(0.0, |e| e.1)
    }

    /// `F(S)`: per slot, the best value any chosen start offers.
    pub fn objective(&self, chosen: &[usize]) -> f64 {
        let mut mark = vec![false; self.horizon];
        for &s in chosen {
            mark[s] = true;
        }
        let best = |row: &[(usize, f64)]| row.iter().filter(|e| mark[e.0]).fold(0.0_f64, |m, e| m.max(e.1));
        let v: f64 = self.v.iter().map(|row| best(row)).fold(0.0, |acc, b| acc + b);
        let w: f64 = self.w.iter().map(|(_, row)| best(row)).fold(0.0, |acc, b| acc + b);
        v + self.eta * w
    }

    /// Slots whose column holds any positive value.
    pub fn has_mass(&self, s: usize) -> bool {
        self.v.iter().flatten().chain(self.w.iter().flat_map(|r| r.1.iter())).any(|e| e.0 == s && e.1 > 0.0)
    }
}
