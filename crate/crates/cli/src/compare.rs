//! Relative improvement of one results file over another.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::matrix::budget_of;
use crate::report::{read_results, ResultRow};
use crate::CliError;

pub const COMPARE_HEADER: &str = "scenario,key,seed,base_mode,other_mode,base_cost_eur,other_cost_eur,improvement_pct,base_pv_usage_pct,other_pv_usage_pct,pv_usage_delta_pp";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKey {
    /// Same schedule parameter string.
    Param,
    /// Same iteration count: classical step against dynamic budget.
    Budget,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompareFilter {
    pub base_mode: Option<String>,
    pub other_mode: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub scenario: String,
    pub key: String,
    /// `None` on the mean row of a group.
    pub seed: Option<u64>,
    pub base_mode: String,
    pub other_mode: String,
    pub base_cost: f64,
    pub other_cost: f64,
    pub base_usage: Option<f64>,
    pub other_usage: Option<f64>,
}

impl ComparisonRow {
    /// Cost saving of `other` relative to `base`, in percent of |base|.
    pub fn improvement_pct(&self) -> Option<f64> {
        (self.base_cost != 0.0).then(|| 100.0 * (self.base_cost - self.other_cost) / self.base_cost.abs())
    }

    pub fn usage_delta(&self) -> Option<f64> {
        Some(self.other_usage? - self.base_usage?)
    }

    fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.key,
            self.seed.map_or_else(|| "mean".into(), |s| s.to_string()),
            self.base_mode,
            self.other_mode,
            self.base_cost,
            self.other_cost,
            opt(self.improvement_pct()),
            opt(self.base_usage),
            opt(self.other_usage),
            opt(self.usage_delta())
        )
    }
}

type Key = (String, String, u64);

fn index(rows: Vec<ResultRow>, by: JoinKey, mode: &Option<String>, file: &str) -> Result<BTreeMap<Key, ResultRow>, CliError> {
    let mut map = BTreeMap::new();
    for row in rows {
        let Some(seed) = row.seed else { continue };
        if mode.as_ref().is_some_and(|m| *m != row.mode) {
            continue;
        }
        let key = match by {
            JoinKey::Param => row.param.clone(),
            JoinKey::Budget => budget_of(&row)
                .ok_or_else(|| CliError::Data { file: file.into(), message: format!("no budget in param {:?}", row.param) })?
                .to_string(),
        };
        let k = (row.scenario.clone(), key, seed);
        if map.insert(k.clone(), row).is_some() {
            return Err(CliError::Data {
                file: file.into(),
                message: format!("several rows for scenario {} key {} seed {}; filter by mode", k.0, k.1, k.2),
            });
        }
    }
    Ok(map)
}

/// Joins both files on scenario, key and seed, then appends one mean row
/// per scenario and key.
pub fn compare(base: &Path, other: &Path, by: JoinKey, filter: &CompareFilter) -> Result<Vec<ComparisonRow>, CliError> {
    let strip = |rows: Vec<crate::report::ParsedRow>| rows.into_iter().map(|p| p.row).collect::<Vec<_>>();
    let base_rows = index(strip(read_results(base)?), by, &filter.base_mode, &base.display().to_string())?;
    let other_rows = index(strip(read_results(other)?), by, &filter.other_mode, &other.display().to_string())?;
    let mut joined: BTreeMap<(String, String), Vec<ComparisonRow>> = BTreeMap::new();
    for (k, b) in &base_rows {
        let Some(o) = other_rows.get(k) else { continue };
        joined.entry((k.0.clone(), k.1.clone())).or_default().push(ComparisonRow {
            scenario: k.0.clone(),
            key: k.1.clone(),
            seed: Some(k.2),
            base_mode: b.mode.clone(),
            other_mode: o.mode.clone(),
            base_cost: b.cost_eur,
            other_cost: o.cost_eur,
            base_usage: b.pv_usage_pct,
            other_usage: o.pv_usage_pct,
        });
    }
    if joined.is_empty() {
        return Err(CliError::Data { file: other.display().to_string(), message: "no rows match the base file".into() });
    }
    let mut out = Vec::new();
    for group in joined.into_values() {
        let n = group.len() as f64;
        let mean_opt = |f: fn(&ComparisonRow) -> Option<f64>| {
            group.iter().map(f).collect::<Option<Vec<f64>>>().map(|v| v.iter().sum::<f64>() / n)
        };
        let mean = ComparisonRow {
            seed: None,
            base_cost: group.iter().map(|r| r.base_cost).sum::<f64>() / n,
            other_cost: group.iter().map(|r| r.other_cost).sum::<f64>() / n,
            base_usage: mean_opt(|r| r.base_usage),
            other_usage: mean_opt(|r| r.other_usage),
            ..group[0].clone()
        };
        out.extend(group);
        out.push(mean);
    }
    Ok(out)
}

pub fn render(rows: &[ComparisonRow]) -> String {
    let mut text = String::from(COMPARE_HEADER);
    text.push('\n');
    for r in rows {
        let _ = writeln!(text, "{}", r.to_csv_line());
    }
    text
}
