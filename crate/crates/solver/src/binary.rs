//! Depth-first branch-and-bound over binary variables.

use std::time::{Duration, Instant};

use crate::{solve_lp_with, Backend, LpStatus, Sense, SolverError, SolverOptions, StandardFormLp};

const INTEGRALITY_TOL: f64 = 1e-6;

/// `maximize c.x  s.t.  A x <= b,  x in {0,1}^n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinaryProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl BinaryProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push((coeffs, rhs));
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        self.rows.iter().all(|(coeffs, rhs)| {
            let lhs: f64 = coeffs.iter().filter(|&&(j, _)| x[j]).map(|&(_, a)| a).sum();
            lhs <= rhs + 1e-9
        })
    }

    pub fn value(&self, x: &[bool]) -> f64 {
        self.objective.iter().zip(x).filter(|(_, &on)| on).map(|(c, _)| c).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinaryStatus {
    Optimal,
    /// Time limit hit with an incumbent; `bound` is the best remaining LP bound.
    TimeLimit { bound: f64 },
    /// Time limit hit before any feasible assignment was found.
    NoIncumbent,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub status: BinaryStatus,
    pub objective: f64,
    pub values: Vec<bool>,
    pub nodes: usize,
    /// Variables left after presolve fixed the dominated ones.
    pub free_vars: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    Zero,
    One,
}

pub fn solve_binary(bp: &BinaryProgram, time_limit: Duration) -> Result<BinarySolution, SolverError> {
    let n = bp.num_vars();
    for (coeffs, rhs) in &bp.rows {
        if !rhs.is_finite() || coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
            return Err(SolverError::Dimension("malformed binary row".into()));
        }
    }
    let started = Instant::now();

    // presolve: a variable whose objective and row coefficients all push the
    // same way can be fixed without loss
    let mut fixes = vec![Fix::Free; n];
    let mut min_coef = vec![0.0_f64; n];
    let mut max_coef = vec![0.0_f64; n];
    for (coeffs, _) in &bp.rows {
        for &(j, a) in coeffs {
            min_coef[j] = min_coef[j].min(a);
            max_coef[j] = max_coef[j].max(a);
        }
    }
    for j in 0..n {
        let c = bp.objective[j];
        if c <= 0.0 && min_coef[j] >= 0.0 {
            fixes[j] = Fix::Zero;
        } else if c >= 0.0 && max_coef[j] <= 0.0 {
            fixes[j] = Fix::One;
        }
    }
    let free_vars = fixes.iter().filter(|f| **f == Fix::Free).count();

    let opts = SolverOptions {
        backend: Backend::Auto,
        ..SolverOptions::default()
    };
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut stack = vec![fixes];
    let mut nodes = 0usize;
    let mut open_bound = f64::NEG_INFINITY;
    let mut timed_out = false;

    while let Some(node) = stack.pop() {
        if started.elapsed() > time_limit {
            timed_out = true;
            stack.push(node);
            break;
        }
        nodes += 1;
        let lp = relaxation(bp, &node);
        let sol = solve_lp_with(&lp, &opts)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(SolverError::Backend("binary relaxation reported unbounded".into()))
            }
            LpStatus::Optimal => {}
        }
        let bound = -sol.objective;
        if let Some((incumbent, _)) = &best {
            if bound <= incumbent + 1e-9 {
                continue;
            }
        }
        let branch = (0..n)
            .filter(|&j| node[j] == Fix::Free)
            .map(|j| (j, (sol.values[j] - sol.values[j].round()).abs()))
            .filter(|&(_, frac)| frac > INTEGRALITY_TOL)
            .fold(None::<(usize, f64)>, |acc, (j, frac)| match acc {
                Some((_, f)) if f >= frac => acc,
                _ => Some((j, frac)),
            });
        match branch {
            None => {
                let x: Vec<bool> = sol.values.iter().map(|v| *v > 0.5).collect();
                if bp.is_feasible(&x) {
                    let value = bp.value(&x);
                    if best.as_ref().is_none_or(|(b, _)| value > *b) {
                        best = Some((value, x));
                    }
                }
            }
            Some((j, _)) => {
                let mut down = node.clone();
                down[j] = Fix::Zero;
                let mut up = node;
                up[j] = Fix::One;
                // depth-first, up branch explored first
                stack.push(down);
                stack.push(up);
            }
        }
    }

    if timed_out {
        for node in &stack {
            let sol = solve_lp_with(&relaxation(bp, node), &opts)?;
            if sol.is_optimal() {
                open_bound = open_bound.max(-sol.objective);
            }
        }
    }

    Ok(match best {
        Some((objective, values)) => BinarySolution {
            status: if timed_out {
                BinaryStatus::TimeLimit { bound: open_bound.max(objective) }
            } else {
                BinaryStatus::Optimal
            },
            objective,
            values,
            nodes,
            free_vars,
        },
        None => BinarySolution {
            status: if timed_out { BinaryStatus::NoIncumbent } else { BinaryStatus::Infeasible },
            objective: f64::NAN,
            values: Vec::new(),
            nodes,
            free_vars,
        },
    })
}

fn relaxation(bp: &BinaryProgram, fixes: &[Fix]) -> StandardFormLp {
    let mut lp = StandardFormLp::new();
    for (j, fix) in fixes.iter().enumerate() {
        let (l, u) = match fix {
            Fix::Free => (0.0, 1.0),
            Fix::Zero => (0.0, 0.0),
            Fix::One => (1.0, 1.0),
        };
        lp.add_col(-bp.objective[j], l, u);
    }
    for (coeffs, rhs) in &bp.rows {
        lp.add_row(coeffs.clone(), Sense::Le, *rhs);
    }
    lp
}
