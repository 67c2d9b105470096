//! CSV report schemas.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use gridroll_core::horizon::SlotTrace;
use gridroll_core::scheduler::SelectionResult;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const RESULTS_HEADER: &str = "mode,scenario,param,seed,cost_eur,pv_used_kwh,pv_realized_kwh,pv_usage_pct,bought_kwh,sold_kwh,net_bought_kwh,shortfall_slots,spilled_kwh,iterations,wall_ms";
pub const SCHEDULE_HEADER: &str = "slot,is_forced,marginal_gain_eur";
pub const TRACE_HEADER: &str = "slot,da_buy_kwh,da_sell_kwh,id_buy_kwh,id_sell_kwh,pv_used_kwh,pv_realized_kwh,load_kwh,battery_charge_kwh,battery_discharge_kwh,ev_charge_kwh,ev_discharge_kwh,battery_soc_kwh,ev_soc_kwh,shortfall_kwh,spill_kwh";

/// One line of `results.csv`. `seed` is `None` on aggregate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub mode: String,
    pub scenario: String,
    pub param: String,
    pub seed: Option<u64>,
    pub cost_eur: f64,
    pub pv_used_kwh: f64,
    pub pv_realized_kwh: f64,
    pub pv_usage_pct: Option<f64>,
    pub bought_kwh: f64,
    pub sold_kwh: f64,
    pub shortfall_slots: f64,
    pub spilled_kwh: f64,
    pub iterations: f64,
    pub wall_ms: f64,
}

impl ResultRow {
    pub fn net_bought_kwh(&self) -> f64 {
        self.bought_kwh - self.sold_kwh
    }

    pub fn to_csv_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "mean".to_string(), |s| s.to_string());
        let usage = self.pv_usage_pct.map_or_else(String::new, |u| u.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.scenario,
            self.param,
            seed,
            self.cost_eur,
            self.pv_used_kwh,
            self.pv_realized_kwh,
            usage,
            self.bought_kwh,
            self.sold_kwh,
            self.net_bought_kwh(),
            self.shortfall_slots,
            self.spilled_kwh,
            self.iterations,
            self.wall_ms
        )
    }

    /// Arithmetic mean of per-seed rows of one group.
    pub fn mean(rows: &[ResultRow]) -> ResultRow {
        let n = rows.len() as f64;
        let avg = |f: fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let usage = rows.iter().map(|r| r.pv_usage_pct).collect::<Option<Vec<f64>>>().map(|u| u.iter().sum::<f64>() / n);
        ResultRow {
            mode: rows[0].mode.clone(),
            scenario: rows[0].scenario.clone(),
            param: rows[0].param.clone(),
            seed: None,
            cost_eur: avg(|r| r.cost_eur),
            pv_used_kwh: avg(|r| r.pv_used_kwh),
            pv_realized_kwh: avg(|r| r.pv_realized_kwh),
            pv_usage_pct: usage,
            bought_kwh: avg(|r| r.bought_kwh),
            sold_kwh: avg(|r| r.sold_kwh),
            shortfall_slots: avg(|r| r.shortfall_slots),
            spilled_kwh: avg(|r| r.spilled_kwh),
            iterations: avg(|r| r.iterations),
            wall_ms: avg(|r| r.wall_ms),
        }
    }
}

/// Parsed `results.csv` line together with the stored net value.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub row: ResultRow,
    pub net_bought_kwh: f64,
}

pub fn read_results(path: &Path) -> Result<Vec<ParsedRow>, CliError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        _ => return Err(CliError::Schema { file: name, line: 1, message: "not a results file".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let err = |m: String| CliError::Schema { file: name.clone(), line: i as u64 + 1, message: m };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 15 {
            return Err(err(format!("expected 15 fields, found {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| err(format!("field {k}: cannot parse {:?}", f[k])));
        let row = ResultRow {
            mode: f[0].to_string(),
            scenario: f[1].to_string(),
            param: f[2].to_string(),
            seed: if f[3] == "mean" { None } else { Some(f[3].parse().map_err(|_| err(format!("bad seed {:?}", f[3])))?) },
            cost_eur: num(4)?,
            pv_used_kwh: num(5)?,
            pv_realized_kwh: num(6)?,
            pv_usage_pct: if f[7].is_empty() { None } else { Some(num(7)?) },
            bought_kwh: num(8)?,
            sold_kwh: num(9)?,
            shortfall_slots: num(11)?,
            spilled_kwh: num(12)?,
            iterations: num(13)?,
            wall_ms: num(14)?,
        };
        out.push(ParsedRow { row, net_bought_kwh: num(10)? });
    }
    Ok(out)
}

pub fn write_trace(path: &Path, trace: &[SlotTrace]) -> Result<(), CliError> {
    let mut text = String::with_capacity(trace.len() * 160);
    text.push_str(TRACE_HEADER);
    text.push('\n');
    for r in trace {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.slot,
            r.da_buy,
            r.da_sell,
            r.id_buy,
            r.id_sell,
            r.pv_used,
            r.pv_realized,
            r.load,
            r.battery_charge,
            r.battery_discharge,
            r.ev_charge,
            r.ev_discharge,
            r.battery_soc,
            r.ev_soc,
            r.shortfall,
            r.spill
        );
    }
    fs::write(path, text)?;
    Ok(())
}

/// Chosen start slots in slot order with their greedy marginal gain.
pub fn write_schedule(path: &Path, selection: &SelectionResult, forced: &[usize]) -> Result<(), CliError> {
    let mut rows = selection.marginal_gains.clone();
    rows.sort_by_key(|r| r.0);
    let mut f = fs::File::create(path)?;
    writeln!(f, "{SCHEDULE_HEADER}")?;
    for (slot, gain) in rows {
        writeln!(f, "{slot},{},{gain}", forced.contains(&slot))?;
    }
    Ok(())
}

pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
