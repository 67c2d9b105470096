//! Flat-file instance format.
//!
//! A data directory holds `prices.csv`, `loads.csv`, `pv.csv`, `trips.csv`,
//! `devices.csv` and `grid.txt`. Numbers are written in shortest round-trip
//! form, so writing and loading gives back the same instance.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use gridroll_core::model::{
    Battery, Ev, LoadProfile, MicrogridInstance, PvSystem, StorageParams, TimeGrid, Trip, SLOTS_PER_HOUR,
};

use crate::CliError;

pub const PRICES_HEADER: [&str; 4] = ["slot", "da_price_eur_per_kwh", "id_buy_eur_per_kwh", "id_sell_eur_per_kwh"];
pub const LOADS_HEADER: [&str; 3] = ["slot", "household_id", "load_kwh"];
pub const PV_HEADER: [&str; 3] = ["slot", "system_id", "forecast_kwh"];
pub const TRIPS_HEADER: [&str; 6] = ["ev_id", "depart_slot", "arrive_slot", "demand_kwh", "depart_window", "arrive_window"];
pub const DEVICES_HEADER: [&str; 8] = [
    "kind",
    "id",
    "capacity_kwh",
    "charge_limit_kwh",
    "discharge_limit_kwh",
    "charge_eff",
    "discharge_eff",
    "initial_soc_kwh",
];

pub fn write_instance(instance: &MicrogridInstance, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let horizon = instance.grid.horizon_slots();
    let p = &instance.prices;

    let mut w = csv::Writer::from_path(dir.join("prices.csv"))?;
    w.write_record(PRICES_HEADER)?;
    for t in 0..horizon {
        w.write_record([
            t.to_string(),
            p.da_price[t / SLOTS_PER_HOUR].to_string(),
            p.id_buy_price[t].to_string(),
            p.id_sell_price[t].to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("loads.csv"))?;
    w.write_record(LOADS_HEADER)?;
    for t in 0..horizon {
        for l in &instance.loads {
            w.write_record([t.to_string(), l.household_id.clone(), l.load[t].to_string()])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("pv.csv"))?;
    w.write_record(PV_HEADER)?;
    for t in 0..horizon {
        for s in &instance.pv {
            w.write_record([t.to_string(), s.system_id.clone(), s.forecast[t].to_string()])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("trips.csv"))?;
    w.write_record(TRIPS_HEADER)?;
    for ev in &instance.evs {
        for trip in &ev.trips {
            w.write_record([
                ev.id.clone(),
                trip.depart_slot.to_string(),
                trip.arrive_slot.to_string(),
                trip.demand.to_string(),
                trip.depart_window.to_string(),
                trip.arrive_window.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("devices.csv"))?;
    w.write_record(DEVICES_HEADER)?;
    let storage = instance
        .batteries
        .iter()
        .map(|b| ("battery", &b.id, &b.params))
        .chain(instance.evs.iter().map(|e| ("ev", &e.id, &e.params)));
    for (kind, id, s) in storage {
        w.write_record([
            kind.to_string(),
            id.clone(),
            s.capacity.to_string(),
            s.charge_limit.to_string(),
            s.discharge_limit.to_string(),
            s.charge_eff.to_string(),
            s.discharge_eff.to_string(),
            s.initial_soc.to_string(),
        ])?;
    }
    w.flush()?;

    let mut f = fs::File::create(dir.join("grid.txt"))?;
    writeln!(f, "grid_capacity_kwh = {}", instance.grid_capacity)?;
    Ok(())
}

/// Reader over one CSV file that reports problems with their line number.
struct Table {
    file: String,
    reader: csv::Reader<fs::File>,
}

impl Table {
    fn open(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let file = fs::File::open(&path)
            .map_err(|e| CliError::Data { file: path.display().to_string(), message: e.to_string() })?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if found != header {
            return Err(CliError::Schema {
                file: name.to_string(),
                line: 1,
                message: format!("expected header {}, found {}", header.join(","), found.join(",")),
            });
        }
        Ok(Self { file: name.to_string(), reader })
    }

    /// Every record with its line number.
    fn rows(&mut self) -> Result<Vec<(u64, csv::StringRecord)>, CliError> {
        let mut out = Vec::new();
        for rec in self.reader.records() {
            let rec = rec.map_err(|e| CliError::Schema {
                file: self.file.clone(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            out.push((line, rec));
        }
        Ok(out)
    }

    fn error(&self, line: u64, message: impl Into<String>) -> CliError {
        CliError::Schema { file: self.file.clone(), line, message: message.into() }
    }

    fn field<T: std::str::FromStr>(&self, rec: &csv::StringRecord, line: u64, idx: usize, name: &str) -> Result<T, CliError> {
        let raw = rec.get(idx).ok_or_else(|| self.error(line, format!("missing field {name}")))?;
        raw.parse().map_err(|_| self.error(line, format!("{name}: cannot parse {raw:?}")))
    }

    fn number(&self, rec: &csv::StringRecord, line: u64, idx: usize, name: &str) -> Result<f64, CliError> {
        let v: f64 = self.field(rec, line, idx, name)?;
        if !v.is_finite() {
            return Err(self.error(line, format!("{name} is not finite")));
        }
        Ok(v)
    }
}

/// Reads a per-slot series file keyed by an id column, keeping ids in order
/// of first appearance.
fn read_series(dir: &Path, name: &str, header: &[&str], horizon: usize) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    let mut table = Table::open(dir, name, header)?;
    let mut order: Vec<String> = Vec::new();
    let mut series: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (line, rec) in table.rows()? {
        let slot: usize = table.field(&rec, line, 0, "slot")?;
        let id: String = table.field(&rec, line, 1, "id")?;
        let value = table.number(&rec, line, 2, header[2])?;
        if slot >= horizon {
            return Err(table.error(line, format!("slot {slot} outside the horizon of {horizon} slots")));
        }
        if value < 0.0 {
            return Err(table.error(line, format!("negative {} {value} for {id} in slot {slot}", header[2])));
        }
        let entry = series.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            vec![None; horizon]
        });
        if entry[slot].replace(value).is_some() {
            return Err(table.error(line, format!("duplicate slot {slot} for {id}")));
        }
    }
    order
        .into_iter()
        .map(|id| {
            let values = series.remove(&id).expect("id recorded");
            let values = values
                .into_iter()
                .enumerate()
                .map(|(t, v)| v.ok_or_else(|| CliError::Data { file: name.into(), message: format!("{id} has no value for slot {t}") }))
                .collect::<Result<Vec<f64>, _>>()?;
            Ok((id, values))
        })
        .collect()
}

fn read_grid_capacity(dir: &Path) -> Result<f64, CliError> {
    let text = fs::read_to_string(dir.join("grid.txt"))
        .map_err(|e| CliError::Data { file: "grid.txt".into(), message: e.to_string() })?;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CliError::Schema { file: "grid.txt".into(), line: i as u64 + 1, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
        if key.trim() != "grid_capacity_kwh" {
            return Err(err(format!("unknown key {:?}", key.trim())));
        }
        return value.trim().parse().map_err(|_| err(format!("cannot parse {:?}", value.trim())));
    }
    Err(CliError::Data { file: "grid.txt".into(), message: "grid_capacity_kwh missing".into() })
}

/// Loads and validates an instance. When `expected_slots` is given the price
/// file must cover exactly that many slots.
pub fn load_instance(dir: &Path, expected_slots: Option<usize>) -> Result<MicrogridInstance, CliError> {
    // prices define the horizon
    let mut table = Table::open(dir, "prices.csv", &PRICES_HEADER)?;
    let rows = table.rows()?;
    let mut da_by_slot = Vec::with_capacity(rows.len());
    let mut id_buy = Vec::with_capacity(rows.len());
    let mut id_sell = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let slot: usize = table.field(rec, *line, 0, "slot")?;
        if slot != da_by_slot.len() {
            return Err(table.error(*line, format!("expected slot {}, found {slot}; price row for slot {} is missing", da_by_slot.len(), da_by_slot.len())));
        }
        da_by_slot.push((table.number(rec, *line, 1, PRICES_HEADER[1])?, *line));
        id_buy.push(table.number(rec, *line, 2, PRICES_HEADER[2])?);
        id_sell.push(table.number(rec, *line, 3, PRICES_HEADER[3])?);
    }
    let horizon = da_by_slot.len();
    if let Some(expected) = expected_slots {
        if expected != horizon {
            return Err(CliError::Data {
                file: "prices.csv".into(),
                message: format!("horizon mismatch: {horizon} slots, configuration expects {expected}"),
            });
        }
    }
    let grid = TimeGrid::new(horizon)?;
    let mut da = Vec::with_capacity(grid.num_hours());
    for hour in da_by_slot.chunks(SLOTS_PER_HOUR) {
        let (first, _) = hour[0];
        if let Some(&(_, line)) = hour.iter().find(|(p, _)| *p != first) {
            return Err(table.error(line, "day-ahead price differs within its hour"));
        }
        da.push(first);
    }

    let mut inst = MicrogridInstance::empty(grid, read_grid_capacity(dir)?);
    inst.prices.da_price = da;
    inst.prices.id_buy_price = id_buy;
    inst.prices.id_sell_price = id_sell;
    inst.loads = read_series(dir, "loads.csv", &LOADS_HEADER, horizon)?
        .into_iter()
        .map(|(household_id, load)| LoadProfile { household_id, load })
        .collect();
    inst.pv = read_series(dir, "pv.csv", &PV_HEADER, horizon)?
        .into_iter()
        .map(|(system_id, forecast)| PvSystem { system_id, forecast })
        .collect();

    let mut table = Table::open(dir, "devices.csv", &DEVICES_HEADER)?;
    for (line, rec) in table.rows()? {
        let kind: String = table.field(&rec, line, 0, "kind")?;
        let id: String = table.field(&rec, line, 1, "id")?;
        let params = StorageParams {
            capacity: table.number(&rec, line, 2, "capacity_kwh")?,
            charge_limit: table.number(&rec, line, 3, "charge_limit_kwh")?,
            discharge_limit: table.number(&rec, line, 4, "discharge_limit_kwh")?,
            charge_eff: table.number(&rec, line, 5, "charge_eff")?,
            discharge_eff: table.number(&rec, line, 6, "discharge_eff")?,
            initial_soc: table.number(&rec, line, 7, "initial_soc_kwh")?,
        };
        params.validate(&id).map_err(|e| table.error(line, e.to_string()))?;
        let duplicate = inst.batteries.iter().any(|b| b.id == id) || inst.evs.iter().any(|e| e.id == id);
        if duplicate {
            return Err(table.error(line, format!("duplicate device id {id}")));
        }
        match kind.as_str() {
            "battery" => inst.batteries.push(Battery { id, params }),
            "ev" => inst.evs.push(Ev { id, params, trips: Vec::new() }),
            other => return Err(table.error(line, format!("unknown device kind {other:?}"))),
        }
    }

    let mut table = Table::open(dir, "trips.csv", &TRIPS_HEADER)?;
    for (line, rec) in table.rows()? {
        let ev_id: String = table.field(&rec, line, 0, "ev_id")?;
        let trip = Trip {
            depart_slot: table.field(&rec, line, 1, "depart_slot")?,
            arrive_slot: table.field(&rec, line, 2, "arrive_slot")?,
            demand: table.number(&rec, line, 3, "demand_kwh")?,
            depart_window: table.field(&rec, line, 4, "depart_window")?,
            arrive_window: table.field(&rec, line, 5, "arrive_window")?,
        };
        if trip.arrive_slot <= trip.depart_slot {
            return Err(table.error(line, format!("trip of {ev_id} arrives at {} before departing at {}", trip.arrive_slot, trip.depart_slot)));
        }
        if trip.demand < 0.0 {
            return Err(table.error(line, format!("negative trip demand {}", trip.demand)));
        }
        let ev = inst.evs.iter_mut().find(|e| e.id == ev_id).ok_or_else(|| table.error(line, format!("unknown EV {ev_id}")))?;
        ev.trips.push(trip);
    }
    for ev in &mut inst.evs {
        ev.trips.sort_by_key(|t| t.depart_slot);
    }
    inst.validate()?;
    Ok(inst)
}
