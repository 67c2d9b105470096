#![allow(dead_code)]

use gridroll_core::model::{
    Battery, Ev, LoadProfile, MicrogridInstance, PvSystem, StorageParams, TimeGrid, Trip,
};
use gridroll_solver::{Sense, StandardFormLp};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn for_each_combination(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if pick.len() == k {
            f(pick);
            return;
        }
        for i in start..n {
            if n - i < k - pick.len() {
                break;
            }
            pick.push(i);
            rec(i + 1, n, k, pick, f);
            pick.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Minimum over all vertices of the feasible polytope. Equality rows and
/// fixed columns are active at every vertex; the remaining active set is
/// chosen exhaustively among inequality rows and finite bounds.
pub fn vertex_optimum(lp: &StandardFormLp) -> Option<f64> {
    let n = lp.num_cols();
    let dense = |coeffs: &[(usize, f64)]| {
        let mut a = vec![0.0; n];
        for &(j, v) in coeffs {
            a[j] += v;
        }
        a
    };
    let mut always = Vec::new();
    let mut optional = Vec::new();
    for row in &lp.rows {
        let plane = (dense(&row.coeffs), row.rhs);
        if row.sense == Sense::Eq {
            always.push(plane);
        } else {
            optional.push(plane);
        }
    }
    for j in 0..n {
        let unit = dense(&[(j, 1.0)]);
        if lp.lower[j] == lp.upper[j] {
            always.push((unit, lp.lower[j]));
            continue;
        }
        for bound in [lp.lower[j], lp.upper[j]] {
            if bound.is_finite() {
                optional.push((unit.clone(), bound));
            }
        }
    }
    if always.len() > n {
        // dependent equalities: keep an independent subset by trial
        let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
        for plane in always {
            let mut trial = kept.clone();
            trial.push(plane.clone());
            if rank(&trial.iter().map(|p| p.0.clone()).collect::<Vec<_>>()) == trial.len() {
                kept = trial;
            }
        }
        always = kept;
    }
    let need = n - always.len();
    let mut best: Option<f64> = None;
    for_each_combination(optional.len(), need, &mut |pick| {
        let mut a: Vec<Vec<f64>> = always.iter().map(|p| p.0.clone()).collect();
        let mut b: Vec<f64> = always.iter().map(|p| p.1).collect();
        for &i in pick {
            a.push(optional[i].0.clone());
            b.push(optional[i].1);
        }
        if let Some(x) = gauss_solve(a, b) {
            if lp.max_violation(&x) <= 1e-7 {
                let obj = lp.objective_value(&x);
                if best.is_none_or(|v| obj < v) {
                    best = Some(obj);
                }
            }
        }
    });
    best
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c].abs() > 1e-10) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c] / m[r][c];
                for k in c..cols {
                    m[i][k] -= f * m[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

/// Checks an optimality certificate: primal feasibility, dual sign
/// conditions, complementary slackness and reduced-cost signs.
pub fn check_kkt(lp: &StandardFormLp, x: &[f64], y: &[f64], tol: f64) {
    assert!(lp.max_violation(x) <= 1e-7, "primal infeasible");
    let mut d = lp.objective.clone();
    for (row, &yi) in lp.rows.iter().zip(y) {
        for &(j, a) in &row.coeffs {
            d[j] -= a * yi;
        }
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        match row.sense {
            Sense::Le => assert!(yi <= tol),
            Sense::Ge => assert!(yi >= -tol),
            Sense::Eq => {}
        }
        assert!((yi * (lhs - row.rhs)).abs() <= tol * (1.0 + yi.abs()));
    }
    for j in 0..lp.num_cols() {
        let at_lower = (x[j] - lp.lower[j]).abs() <= 1e-7;
        let at_upper = (x[j] - lp.upper[j]).abs() <= 1e-7;
        if !at_lower && !at_upper {
            assert!(d[j].abs() <= tol, "column {j} reduced cost {}", d[j]);
        } else if at_lower && !at_upper {
            assert!(d[j] >= -tol);
        } else if at_upper && !at_lower {
            assert!(d[j] <= tol);
        }
    }
}

pub fn storage(capacity: f64, limit: f64, initial: f64) -> StorageParams {
    StorageParams {
        capacity,
        charge_limit: limit,
        discharge_limit: limit,
        charge_eff: 0.95,
        discharge_eff: 0.95,
        initial_soc: initial,
    }
}

/// One-day instance with random prices and `slots` slots of nonzero data.
/// Households, PV systems, batteries and EVs are added on request.
pub fn small_instance(
    rng: &mut ChaCha8Rng,
    slots: usize,
    households: usize,
    pv: usize,
    batteries: usize,
    evs: usize,
) -> MicrogridInstance {
    let grid = TimeGrid::days(1).unwrap();
    let mut inst = MicrogridInstance::empty(grid, rng.random_range(3.0..6.0));
    for p in &mut inst.prices.da_price {
        *p = rng.random_range(0.05..0.3);
    }
    for t in 0..96 {
        let buy = rng.random_range(0.05..0.4);
        inst.prices.id_buy_price[t] = buy;
        inst.prices.id_sell_price[t] = buy * rng.random_range(0.3..0.95);
    }
    for i in 0..households {
        let mut load = vec![0.0; 96];
        for v in load.iter_mut().take(slots) {
            *v = rng.random_range(0.0..1.5);
        }
        inst.loads.push(LoadProfile { household_id: format!("h{i}"), load });
    }
    for j in 0..pv {
        let mut forecast = vec![0.0; 96];
        for v in forecast.iter_mut().take(slots) {
            *v = rng.random_range(0.0..1.0);
        }
        inst.pv.push(PvSystem { system_id: format!("pv{j}"), forecast });
    }
    for k in 0..batteries {
        inst.batteries.push(Battery { id: format!("b{k}"), params: storage(4.0, 1.5, rng.random_range(0.0..2.0)) });
    }
    for h in 0..evs {
        let mut trips = Vec::new();
        if slots >= 4 {
            trips.push(Trip { depart_slot: 1, arrive_slot: 3, depart_window: 0, arrive_window: 0, demand: 1.0 });
        }
        inst.evs.push(Ev { id: format!("ev{h}"), params: storage(6.0, 1.5, rng.random_range(1.0..3.0)), trips });
    }
    inst.validate().unwrap();
    inst
}

/// Multi-day instance with daily shapes: evening-peaked loads, bell-shaped
/// PV, one battery and EVs with one uncertain evening trip per day.
pub fn daily_instance(rng: &mut ChaCha8Rng, days: usize, households: usize, pv: usize, evs: usize) -> MicrogridInstance {
    let grid = TimeGrid::days(days).unwrap();
    let slots = grid.horizon_slots();
    let mut inst = MicrogridInstance::empty(grid, 8.0);
    for h in 0..grid.num_hours() {
        let hod = h % 24;
        inst.prices.da_price[h] = 0.08 + 0.06 * ((hod as f64 - 3.0) / 24.0 * std::f64::consts::TAU).sin().abs()
            + rng.random_range(0.0..0.02);
    }
    for t in 0..slots {
        let da = inst.prices.da_price[t / 4];
        inst.prices.id_buy_price[t] = da * rng.random_range(1.0..1.4);
        inst.prices.id_sell_price[t] = da * rng.random_range(0.5..0.95);
    }
    for i in 0..households {
        let load = (0..slots)
            .map(|t| {
                let hod = (t % 96) as f64 / 4.0;
                let evening = (-((hod - 19.0) / 2.5).powi(2)).exp();
                0.05 + 0.25 * evening + rng.random_range(0.0..0.05)
            })
            .collect();
        inst.loads.push(LoadProfile { household_id: format!("h{i}"), load });
    }
    for j in 0..pv {
        let forecast = (0..slots)
            .map(|t| {
                let hod = (t % 96) as f64 / 4.0;
                (0.4 * (-((hod - 13.0) / 2.5).powi(2)).exp() - 0.01).max(0.0)
            })
            .collect();
        inst.pv.push(PvSystem { system_id: format!("p{j}"), forecast });
    }
    inst.batteries.push(Battery { id: "b".into(), params: storage(6.0, 1.0, 0.0) });
    for e in 0..evs {
        let trips = (0..days)
            .map(|d| {
                let depart = d * 96 + 66 + rng.random_range(0..8);
                Trip {
                    depart_slot: depart,
                    arrive_slot: depart + rng.random_range(6..12),
                    depart_window: 2,
                    arrive_window: 2,
                    demand: rng.random_range(2.0..6.0),
                }
            })
            .collect();
        inst.evs.push(Ev { id: format!("ev{e}"), params: storage(20.0, 2.0, 0.0), trips });
    }
    inst.validate().unwrap();
    inst
}
