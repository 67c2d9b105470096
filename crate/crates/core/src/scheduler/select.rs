use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Duration;

use gridroll_solver::{solve_binary, BinaryProgram, BinaryStatus};

use super::GainMatrix;
use crate::SchedulerError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMode {
    /// Lazy greedy on the monotone submodular objective.
    Greedy,
    /// Branch-and-bound on the binary program; meant for small horizons.
    Exact { time_limit: Duration },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_slots: Vec<usize>,
    /// `t -> s` serving the PV part of slot `t`.
    pub assignment_v: BTreeMap<usize, usize>,
    pub assignment_w: BTreeMap<usize, usize>,
    pub objective: f64,
    /// Slots in the order they were added, with their marginal gain. Forced
    /// slots come first.
    pub marginal_gains: Vec<(usize, f64)>,
    pub exact_status: Option<BinaryStatus>,
}

/// Column view of a gain matrix: for each start `s`, the `(row, value)`
/// entries it can serve. Rows `0..horizon` are v rows, the rest w rows.
struct Columns {
    cols: Vec<Vec<(usize, f64)>>,
    rows: usize,
}

impl Columns {
    fn new(g: &GainMatrix) -> Self {
        let mut cols = vec![Vec::new(); g.horizon];
        for (t, row) in g.v.iter().enumerate() {
            for &(s, v) in row {
                cols[s].push((t, v));
            }
        }
        for (r, (_, row)) in g.w.iter().enumerate() {
            for &(s, w) in row {
                cols[s].push((g.horizon + r, g.eta * w));
            }
        }
        Self { cols, rows: g.horizon + g.w.len() }
    }

    fn gain(&self, s: usize, best: &[f64]) -> f64 {
        self.cols[s].iter().map(|&(r, v)| (v - best[r]).max(0.0)).fold(0.0, |acc, g| acc + g)
    }

    fn take(&self, s: usize, best: &mut [f64]) {
        for &(r, v) in &self.cols[s] {
            best[r] = best[r].max(v);
        }
    }
}

#[derive(PartialEq)]
struct Candidate {
    gain: f64,
    slot: usize,
    round: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then(other.slot.cmp(&self.slot))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn assignments(g: &GainMatrix, chosen: &[usize]) -> (BTreeMap<usize, usize>, BTreeMap<usize, usize>) {
    let argmax = |row: &[(usize, f64)]| {
        row.iter()
            .filter(|e| chosen.binary_search(&e.0).is_ok() && e.1 > 0.0)
            .fold(None::<(usize, f64)>, |acc, &(s, v)| match acc {
                Some((bs, bv)) if bv > v || (bv == v && bs < s) => acc,
                _ => Some((s, v)),
            })
            .map(|e| e.0)
    };
    let v = g.v.iter().enumerate().filter_map(|(t, row)| argmax(row).map(|s| (t, s))).collect();
    let w = g.w.iter().filter_map(|(t, row)| argmax(row).map(|s| (*t, s))).collect();
    (v, w)
}

/// Picks at most `k` start slots containing `forced`.
pub fn select_starts(
    gains: &GainMatrix,
    k: usize,
    forced: &[usize],
    mode: SelectionMode,
) -> Result<SelectionResult, SchedulerError> {
    let mut forced_sorted = forced.to_vec();
    forced_sorted.sort_unstable();
    forced_sorted.dedup();
    if k < forced_sorted.len() {
        return Err(SchedulerError::BudgetBelowForced { k, forced: forced_sorted.len() });
    }
    if let Some(&bad) = forced_sorted.iter().find(|&&s| s >= gains.horizon) {
        return Err(SchedulerError::SlotOutsideHorizon(bad));
    }
    match mode {
        SelectionMode::Greedy => Ok(greedy(gains, k, &forced_sorted)),
        SelectionMode::Exact { time_limit } => exact(gains, k, &forced_sorted, time_limit),
    }
}

fn greedy(g: &GainMatrix, k: usize, forced: &[usize]) -> SelectionResult {
    let cols = Columns::new(g);
    let mut best = vec![0.0; cols.rows];
    let mut chosen = Vec::with_capacity(k);
    let mut marginal_gains = Vec::with_capacity(k);
    let mut taken = vec![false; g.horizon];
    for &s in forced {
        marginal_gains.push((s, cols.gain(s, &best)));
        cols.take(s, &mut best);
        taken[s] = true;
        chosen.push(s);
    }
    let mut heap: BinaryHeap<Candidate> = (0..g.horizon)
        .filter(|&s| !taken[s])
        .map(|s| Candidate { gain: cols.gain(s, &best), slot: s, round: 0 })
        .collect();
    let mut round = 0;
    while chosen.len() < k {
        let Some(top) = heap.pop() else { break };
        if top.gain <= 0.0 {
            break;
        }
        if top.round == round {
            cols.take(top.slot, &mut best);
            chosen.push(top.slot);
            marginal_gains.push((top.slot, top.gain));
            round += 1;
        } else {
            heap.push(Candidate { gain: cols.gain(top.slot, &best), slot: top.slot, round });
        }
    }
    chosen.sort_unstable();
    let (assignment_v, assignment_w) = assignments(g, &chosen);
    let objective = g.objective(&chosen);
    SelectionResult { chosen_slots: chosen, assignment_v, assignment_w, objective, marginal_gains, exact_status: None }
}

/// `max sum v y + eta sum w z` over `x` (starts), `y`, `z` (assignments)
/// with `y, z <= x`, one assignment per row and `sum x <= k`.
fn exact(g: &GainMatrix, k: usize, forced: &[usize], time_limit: Duration) -> Result<SelectionResult, SchedulerError> {
    let cols = Columns::new(g);
    let n_x = g.horizon;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (s, col) in cols.cols.iter().enumerate() {
        for &(r, v) in col {
            if v > 0.0 {
                entries.push((r, s, v));
            }
        }
    }
    let mut bp = BinaryProgram::new(n_x + entries.len());
    bp.add_le((0..n_x).map(|s| (s, 1.0)).collect(), k as f64);
    for &s in forced {
        bp.add_le(vec![(s, -1.0)], -1.0);
    }
    let mut per_row: Vec<Vec<usize>> = vec![Vec::new(); cols.rows];
    for (e, &(r, s, v)) in entries.iter().enumerate() {
        let j = n_x + e;
        bp.objective[j] = v;
        bp.add_le(vec![(j, 1.0), (s, -1.0)], 0.0);
        per_row[r].push(j);
    }
    for vars in per_row.into_iter().filter(|v| v.len() > 1) {
        bp.add_le(vars.into_iter().map(|j| (j, 1.0)).collect(), 1.0);
    }
    let sol = solve_binary(&bp, time_limit)?;
    if matches!(sol.status, BinaryStatus::Infeasible | BinaryStatus::NoIncumbent) {
        return Err(SchedulerError::NoSelection(sol.status));
    }
    let mut chosen: Vec<usize> = (0..n_x).filter(|&s| sol.values[s]).collect();
    // starts without any served row add nothing; keep the forced ones only
    chosen.retain(|s| forced.contains(s) || sol_serves(&entries, &sol.values, n_x, *s));
    let (assignment_v, assignment_w) = assignments(g, &chosen);
    let objective = g.objective(&chosen);
    let marginal_gains = marginal_sequence(&cols, forced, &chosen);
    Ok(SelectionResult {
        chosen_slots: chosen,
        assignment_v,
        assignment_w,
        objective,
        marginal_gains,
        exact_status: Some(sol.status),
    })
}

fn sol_serves(entries: &[(usize, usize, f64)], values: &[bool], n_x: usize, s: usize) -> bool {
    entries.iter().enumerate().any(|(e, &(_, es, _))| es == s && values[n_x + e])
}

/// Marginal gains of `chosen` when added forced-first, then by slot.
fn marginal_sequence(cols: &Columns, forced: &[usize], chosen: &[usize]) -> Vec<(usize, f64)> {
    let mut best = vec![0.0; cols.rows];
    let order = forced.iter().chain(chosen.iter().filter(|s| !forced.contains(s)));
    order
        .map(|&s| {
            let gain = cols.gain(s, &best);
            cols.take(s, &mut best);
            (s, gain)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GainMatrix {
        let mut g = GainMatrix::empty(6, 1.0);
        g.v[2] = vec![(0, 1.0), (1, 2.0), (2, 3.0)];
        g.v[3] = vec![(2, 1.0), (3, 2.5)];
        g.v[5] = vec![(4, 2.0), (5, 2.2)];
        g.w.push((1, vec![(3, 1.0), (4, 0.5)]));
        g
    }

    #[test]
    fn forced_only_when_budget_is_exhausted() {
        let r = select_starts(&toy(), 2, &[0, 4], SelectionMode::Greedy).unwrap();
        assert_eq!(r.chosen_slots, vec![0, 4]);
        assert!(select_starts(&toy(), 1, &[0, 4], SelectionMode::Greedy).is_err());
    }

    #[test]
    fn greedy_takes_largest_gain_first() {
        let r = select_starts(&toy(), 1, &[], SelectionMode::Greedy).unwrap();
        // slot 3 serves 2.5 + 1.0, slot 2 serves 3 + 1
        assert_eq!(r.chosen_slots, vec![2]);
        assert_eq!(r.marginal_gains, vec![(2, 4.0)]);
        assert_eq!(r.assignment_v.get(&3), Some(&2));
    }

    #[test]
    fn zero_gains_choose_nothing_extra() {
        let g = GainMatrix::empty(10, 1.0);
        let r = select_starts(&g, 5, &[0], SelectionMode::Greedy).unwrap();
        assert_eq!(r.chosen_slots, vec![0]);
        let r = select_starts(&g, 5, &[0], SelectionMode::Exact { time_limit: Duration::from_secs(5) }).unwrap();
        assert_eq!(r.chosen_slots, vec![0]);
    }

    #[test]
    fn exact_matches_toy_optimum() {
        let r = select_starts(&toy(), 2, &[], SelectionMode::Exact { time_limit: Duration::from_secs(5) }).unwrap();
        assert_eq!(r.exact_status, Some(BinaryStatus::Optimal));
        // {2, 3} and {2, 4} both reach 6.5; {2, 5} gives 6.2, {3, 5} 5.7
        assert!((r.objective - 6.5).abs() < 1e-12);
        assert!(r.chosen_slots == vec![2, 3] || r.chosen_slots == vec![2, 4]);
    }
}
