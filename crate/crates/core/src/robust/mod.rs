//! Uncertainty sets, realizations and the robust counterpart of a window LP.
//!
//! Loads use a budget set per slot, PV a forecast set that narrows as the
//! slot approaches, EV demand and trip times boxes, prices boxes that only
//! enter the objective.

mod budget;
mod counterpart;
mod realization;

pub use budget::support_budget;
pub use counterpart::{ev_window_plan, pv_bound, robustify_window, robustify_window_with, ProtectionForm};
pub use realization::{realized_value, sample_realization, InfoState, Realization};

use crate::model::{MicrogridInstance, Trip};
use crate::RobustError;

/// Relative half-widths of every box plus the budgets of the load and PV sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub alpha_load: f64,
    pub alpha_pv: f64,
    pub alpha_ev: f64,
    pub alpha_da: f64,
    pub alpha_id: f64,
    /// `None` means the number of households.
    pub gamma_load: Option<f64>,
    /// `None` means the number of PV systems.
    pub gamma_pv: Option<f64>,
    /// Overrides the per-trip departure and arrival windows when set.
    pub ev_time_window_slots: Option<usize>,
}

impl ScenarioConfig {
    pub fn deterministic() -> Self {
        Self {
            alpha_load: 0.0,
            alpha_pv: 0.0,
            alpha_ev: 0.0,
            alpha_da: 0.0,
            alpha_id: 0.0,
            gamma_load: None,
            gamma_pv: None,
            ev_time_window_slots: None,
        }
    }

    /// Presets "A", "B" and "C", in increasing order of uncertainty.
    pub fn preset(name: &str) -> Option<Self> {
        let (l, pv, ev, da, id) = match name {
            "A" => (0.10, 0.10, 0.05, 0.10, 0.20),
            "B" => (0.20, 0.25, 0.10, 0.15, 0.35),
            "C" => (0.35, 0.40, 0.20, 0.20, 0.50),
            _ => return None,
        };
        Some(Self { alpha_load: l, alpha_pv: pv, alpha_ev: ev, alpha_da: da, alpha_id: id, ..Self::deterministic() })
    }

    pub fn gamma_load_for(&self, households: usize) -> f64 {
        self.gamma_load.unwrap_or(households as f64)
    }

    pub fn gamma_pv_for(&self, systems: usize) -> f64 {
        self.gamma_pv.unwrap_or(systems as f64)
    }

    /// `(depart_window, arrive_window)` in effect for `trip`.
    pub fn trip_windows(&self, trip: &Trip) -> (usize, usize) {
        match self.ev_time_window_slots {
            Some(w) => (w, w),
            None => (trip.depart_window, trip.arrive_window),
        }
    }

    /// Instance whose trips carry the windows in effect under this scenario.
    pub fn apply_to(&self, instance: &MicrogridInstance) -> Result<MicrogridInstance, RobustError> {
        let mut out = instance.clone();
        for ev in &mut out.evs {
            for trip in &mut ev.trips {
                (trip.depart_window, trip.arrive_window) = self.trip_windows(trip);
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self, instance: &MicrogridInstance) -> Result<(), RobustError> {
        let alphas = [
            ("alpha_load", self.alpha_load),
            ("alpha_pv", self.alpha_pv),
            ("alpha_ev", self.alpha_ev),
            ("alpha_da", self.alpha_da),
            ("alpha_id", self.alpha_id),
        ];
        for (name, a) in alphas {
            if !(0.0..1.0).contains(&a) {
                return Err(RobustError::InvalidScenario(format!("{name} = {a} outside [0, 1)")));
            }
        }
        let households = instance.loads.len();
        let gamma = self.gamma_load_for(households);
        if !(gamma >= 0.0 && gamma <= households as f64) {
            return Err(RobustError::InvalidGamma { gamma, dimension: households });
        }
        let systems = instance.pv.len();
        let gamma = self.gamma_pv_for(systems);
        if !(gamma >= 0.0 && gamma <= systems as f64) {
            return Err(RobustError::InvalidGamma { gamma, dimension: systems });
        }
        self.apply_to(instance).map(|_| ())
    }
}

/// Shape of the improved short-term PV forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DynamicPvRamp {
    pub improved_window_slots: usize,
}

impl Default for DynamicPvRamp {
    fn default() -> Self {
        Self { improved_window_slots: 8 }
    }
}

impl DynamicPvRamp {
    /// Fraction of the long-term half-width left at `lead` slots ahead.
    pub fn reduction(&self, lead: usize) -> f64 {
        if lead == 0 {
            0.0
        } else if lead >= self.improved_window_slots {
            1.0
        } else {
            lead as f64 / self.improved_window_slots as f64
        }
    }
}

pub fn effective_pv_alpha(alpha_pv: f64, lead: usize, ramp: &DynamicPvRamp) -> f64 {
    alpha_pv * ramp.reduction(lead)
}
