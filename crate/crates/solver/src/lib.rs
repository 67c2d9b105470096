//! Exact solvers used by the energy-management engine.
//!
//! Two entry points:
//! - [`solve_lp`] minimizes a linear objective over rows with `<=`, `=` or
//!   `>=` sense and per-column bounds. Small problems go through a dense
//!   bounded primal simplex; large sparse window models go through a sparse
//!   simplex backend.
//! - [`solve_binary`] maximizes a linear objective over binary variables with
//!   `<=` rows by depth-first branch-and-bound on LP relaxations.

mod binary;
mod dense;
mod sparse;
mod text;

pub use binary::{solve_binary, BinaryProgram, BinarySolution, BinaryStatus};
pub use text::write_lp_text;

use thiserror::Error;

/// Row sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// One sparse constraint row `sum coeffs * x  (sense)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `minimize c.x  s.t.  A x (sense) b,  lower <= x <= upper`.
///
/// Infinite bounds are written as `f64::NEG_INFINITY` / `f64::INFINITY`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StandardFormLp {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl StandardFormLp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Appends a column and returns its index.
    pub fn add_col(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Appends a row and returns its index.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    /// Checks dimensions, finiteness and bound ordering.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolverError::Dimension(format!(
                "{} objective coefficients but {} lower / {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(SolverError::NonFinite(format!("objective coefficient of column {j}")));
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(SolverError::NonFinite(format!("bounds of column {j}")));
            }
            if l > u {
                return Err(SolverError::Dimension(format!(
                    "column {j} has lower bound {l} above upper bound {u}"
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolverError::NonFinite(format!("right-hand side of row {i}")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(SolverError::Dimension(format!(
                        "row {i} references column {j} but the problem has {n} columns"
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::NonFinite(format!("coefficient ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective at `values`; `NaN` unless optimal.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row multipliers `y` with reduced costs `c - A^T y`, when the backend
    /// provides them. `y_i >= 0` for `>=` rows and `y_i <= 0` for `<=` rows.
    pub duals: Option<Vec<f64>>,
}

impl LpSolution {
    pub(crate) fn non_optimal(status: LpStatus) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            duals: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Dense below [`SolverOptions::dense_cell_limit`] tableau cells, sparse above.
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub backend: Backend,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
    pub max_iterations: usize,
    pub dense_cell_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            stall_threshold: 50,
            max_iterations: 1_000_000,
            dense_cell_limit: 400_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("sparse backend failed: {0}")]
    Backend(String),
}

/// Solves `lp` with default options.
pub fn solve_lp(lp: &StandardFormLp) -> Result<LpSolution, SolverError> {
    solve_lp_with(lp, &SolverOptions::default())
}

pub fn solve_lp_with(lp: &StandardFormLp, opts: &SolverOptions) -> Result<LpSolution, SolverError> {
    lp.validate()?;
    let backend = match opts.backend {
        Backend::Auto => {
            // tableau is rows x (cols + rows) in the worst case
            let cells = lp.num_rows().saturating_mul(lp.num_cols() + 2 * lp.num_rows());
            if cells <= opts.dense_cell_limit {
                Backend::Dense
            } else {
                Backend::Sparse
            }
        }
        b => b,
    };
    let mut sol = match backend {
        Backend::Sparse => sparse::solve(lp)?,
        _ => dense::solve(lp, opts)?,
    };
    if sol.is_optimal() {
        // snap tiny bound excursions left by floating-point pivoting
        for (j, v) in sol.values.iter_mut().enumerate() {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            if *v < l && l - *v <= opts.feasibility_tol {
                *v = l;
            }
            if *v > u && *v - u <= opts.feasibility_tol {
                *v = u;
            }
        }
        sol.objective = lp.objective_value(&sol.values);
    }
    Ok(sol)
}
