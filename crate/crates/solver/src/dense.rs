//! Dense bounded primal simplex (two-phase, tableau form).
//!
//! Columns are shifted so every working variable lives in `[0, U]` with `U`
//! possibly infinite; finite upper bounds are handled by bound flipping, not
//! extra rows. Pricing is Dantzig's rule with lowest-index tie breaking and
//! falls back to Bland's rule after a run of degenerate pivots.

use crate::{LpSolution, LpStatus, Sense, SolverError, SolverOptions, StandardFormLp};

const PIVOT_TOL: f64 = 1e-9;

/// How an original column maps onto working columns: `x = offset + sign * x'`.
struct ColMap {
    parts: Vec<(usize, f64)>,
    offset: f64,
}

struct Tableau {
    m: usize,
    n: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    d: Vec<f64>,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    fn reset_costs(&mut self, cost: &[f64]) {
        self.d.clear();
        self.d.extend_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.n..(i + 1) * self.n];
                for (dj, &aij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    fn entering(&self, opt_tol: f64, bland: bool, blocked: &[bool]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if self.is_basic[j] || blocked[j] || self.upper[j] == 0.0 {
                continue;
            }
            let dj = self.d[j];
            let improving = if self.at_upper[j] { dj > opt_tol } else { dj < -opt_tol };
            if !improving {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some((_, score)) if dj.abs() <= score => {}
                _ => best = Some((j, dj.abs())),
            }
        }
        best.map(|(j, _)| j)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let p = self.a[r * n + j];
        for v in &mut self.a[r * n..(r + 1) * n] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + j];
            if f != 0.0 {
                let row = &mut self.a[i * n..(i + 1) * n];
                for (v, &pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (dv, &pr) in self.d.iter_mut().zip(&pivot_row) {
                *dv -= f * pr;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// One simplex iteration; returns the step length for degeneracy tracking.
    fn iterate(&mut self, opts: &SolverOptions, bland: bool, blocked: &[bool]) -> (Step, f64) {
        let Some(j) = self.entering(opts.optimality_tol, bland, blocked) else {
            return (Step::Optimal, 0.0);
        };
        let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
        let mut theta = self.upper[j];
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..self.m {
            let alpha = dir * self.at(i, j);
            let b = self.basis[i];
            let (limit, to_upper) = if alpha > PIVOT_TOL {
                ((self.beta[i] / alpha).max(0.0), false)
            } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                (((self.upper[b] - self.beta[i]) / -alpha).max(0.0), true)
            } else {
                continue;
            };
            let better = match leave {
                None => limit < theta,
                Some((r, _)) => limit < theta - 1e-12 || (limit <= theta + 1e-12 && b < self.basis[r]),
            };
            if better {
                theta = limit;
                leave = Some((i, to_upper));
            }
        }
        if theta == f64::INFINITY {
            return (Step::Unbounded, 0.0);
        }
        for i in 0..self.m {
            let alpha = self.at(i, j);
            if alpha != 0.0 {
                self.beta[i] -= dir * alpha * theta;
            }
        }
        match leave {
            None => {
                self.at_upper[j] = !self.at_upper[j];
            }
            Some((r, to_upper)) => {
                let leaving = self.basis[r];
                let entering_value = if dir > 0.0 { theta } else { self.upper[j] - theta };
                self.pivot(r, j);
                self.beta[r] = entering_value;
                self.at_upper[leaving] = to_upper;
                self.at_upper[j] = false;
            }
        }
        (Step::Continue, theta)
    }

    fn run(&mut self, opts: &SolverOptions, blocked: &[bool], iterations: &mut usize) -> Result<Step, SolverError> {
        let mut degenerate = 0usize;
        loop {
            if *iterations >= opts.max_iterations {
                return Err(SolverError::IterationLimit(opts.max_iterations));
            }
            *iterations += 1;
            let bland = degenerate >= opts.stall_threshold;
            let (step, theta) = self.iterate(opts, bland, blocked);
            match step {
                Step::Continue => {
                    if theta <= opts.feasibility_tol {
                        degenerate += 1;
                    } else {
                        degenerate = 0;
                    }
                }
                other => return Ok(other),
            }
        }
    }
}

pub(crate) fn solve(lp: &StandardFormLp, opts: &SolverOptions) -> Result<LpSolution, SolverError> {
    // working columns for the original variables
    let mut maps = Vec::with_capacity(lp.num_cols());
    let mut upper = Vec::new();
    let mut cost = Vec::new();
    for j in 0..lp.num_cols() {
        let (l, u, c) = (lp.lower[j], lp.upper[j], lp.objective[j]);
        let map = if l.is_finite() {
            upper.push(u - l);
            cost.push(c);
            ColMap { parts: vec![(upper.len() - 1, 1.0)], offset: l }
        } else if u.is_finite() {
            upper.push(f64::INFINITY);
            cost.push(-c);
            ColMap { parts: vec![(upper.len() - 1, -1.0)], offset: u }
        } else {
            upper.push(f64::INFINITY);
            cost.push(c);
            upper.push(f64::INFINITY);
            cost.push(-c);
            ColMap { parts: vec![(upper.len() - 2, 1.0), (upper.len() - 1, -1.0)], offset: 0.0 }
        };
        maps.push(map);
    }
    let structural = upper.len();
    let m = lp.num_rows();

    // row transforms
    let mut dense_rows = vec![vec![0.0; structural]; m];
    let mut rhs = vec![0.0; m];
    let mut senses = Vec::with_capacity(m);
    let mut flips = vec![1.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut b = row.rhs;
        for &(j, a) in &row.coeffs {
            b -= a * maps[j].offset;
            for &(k, s) in &maps[j].parts {
                dense_rows[i][k] += a * s;
            }
        }
        let mut sense = row.sense;
        if b < 0.0 {
            b = -b;
            flips[i] = -1.0;
            for v in &mut dense_rows[i] {
                *v = -*v;
            }
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        rhs[i] = b;
        senses.push(sense);
    }

    // slack / surplus / artificial columns
    let mut extra: Vec<(usize, f64)> = Vec::new();
    let mut init_basic = vec![0usize; m];
    let mut artificial = Vec::new();
    let mut next = structural;
    for (i, sense) in senses.iter().enumerate() {
        match sense {
            Sense::Le => {
                extra.push((i, 1.0));
                init_basic[i] = next;
                next += 1;
            }
            Sense::Ge => {
                extra.push((i, -1.0));
                next += 1;
                extra.push((i, 1.0));
                init_basic[i] = next;
                artificial.push(next);
                next += 1;
            }
            Sense::Eq => {
                extra.push((i, 1.0));
                init_basic[i] = next;
                artificial.push(next);
                next += 1;
            }
        }
    }
    let n = next;
    let mut a = vec![0.0; m * n];
    for i in 0..m {
        a[i * n..i * n + structural].copy_from_slice(&dense_rows[i]);
    }
    for (k, &(i, v)) in extra.iter().enumerate() {
        a[i * n + structural + k] = v;
    }
    upper.resize(n, f64::INFINITY);
    cost.resize(n, 0.0);
    let mut is_basic = vec![false; n];
    for &b in &init_basic {
        is_basic[b] = true;
    }
    let mut tab = Tableau {
        m,
        n,
        a,
        beta: rhs.clone(),
        basis: init_basic.clone(),
        is_basic,
        at_upper: vec![false; n],
        upper,
        d: Vec::new(),
    };
    let mut blocked = vec![false; n];
    let mut iterations = 0usize;

    if !artificial.is_empty() {
        let mut phase1 = vec![0.0; n];
        for &k in &artificial {
            phase1[k] = 1.0;
        }
        tab.reset_costs(&phase1);
        if let Step::Unbounded = tab.run(opts, &blocked, &mut iterations)? {
            return Err(SolverError::Backend("phase one reported an unbounded ray".into()));
        }
        let infeasibility: f64 = (0..m)
            .filter(|&i| phase1[tab.basis[i]] > 0.0)
            .map(|i| tab.beta[i])
            .sum();
        let scale = rhs.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
        }
        for &k in &artificial {
            tab.upper[k] = 0.0;
            blocked[k] = true;
        }
        // drive zero-level artificials out of the basis where possible
        for r in 0..m {
            let b = tab.basis[r];
            if !blocked[b] {
                continue;
            }
            tab.beta[r] = 0.0;
            let candidate = (0..n).find(|&j| !tab.is_basic[j] && !blocked[j] && tab.at(r, j).abs() > 1e-7);
            if let Some(j) = candidate {
                let value = if tab.at_upper[j] { tab.upper[j] } else { 0.0 };
                tab.pivot(r, j);
                tab.beta[r] = value;
                tab.at_upper[j] = false;
                tab.at_upper[b] = false;
            }
        }
    }

    tab.reset_costs(&cost);
    if let Step::Unbounded = tab.run(opts, &blocked, &mut iterations)? {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded));
    }

    let mut work = vec![0.0; n];
    for j in 0..n {
        if tab.at_upper[j] {
            work[j] = tab.upper[j];
        }
    }
    for i in 0..m {
        work[tab.basis[i]] = tab.beta[i];
    }
    let values: Vec<f64> = maps
        .iter()
        .map(|map| map.offset + map.parts.iter().map(|&(k, s)| s * work[k]).sum::<f64>())
        .collect();
    let duals: Vec<f64> = (0..m).map(|i| -flips[i] * tab.d[init_basic[i]]).collect();
    let objective = lp.objective_value(&values);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        values,
        duals: Some(duals),
    })
}
