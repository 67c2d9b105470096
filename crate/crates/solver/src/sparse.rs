//! Sparse simplex backend (HiGHS) for window-sized models.

use highs::{HighsModelStatus, RowProblem, Sense as Direction};

use crate::{LpSolution, LpStatus, Sense, SolverError, StandardFormLp};

pub(crate) fn solve(lp: &StandardFormLp) -> Result<LpSolution, SolverError> {
    run(lp, true)
}

fn run(lp: &StandardFormLp, presolve: bool) -> Result<LpSolution, SolverError> {
    let mut problem = RowProblem::default();
    let cols: Vec<_> = (0..lp.num_cols())
        .map(|j| problem.add_column(lp.objective[j], lp.lower[j]..=lp.upper[j]))
        .collect();
    for row in &lp.rows {
        let terms = row.coeffs.iter().map(|&(j, a)| (cols[j], a));
        match row.sense {
            Sense::Le => problem.add_row(..=row.rhs, terms),
            Sense::Eq => problem.add_row(row.rhs..=row.rhs, terms),
            Sense::Ge => problem.add_row(row.rhs.., terms),
        }
    }
    let mut model = problem.optimise(Direction::Minimise);
    model.make_quiet();
    model.set_option("parallel", "off");
    model.set_option("threads", 1);
    if !presolve {
        model.set_option("presolve", "off");
    }
    let solved = model.try_solve().map_err(|e| SolverError::Backend(format!("{e:?}")))?;
    match solved.status() {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => {
            let values = solved.get_solution().columns().to_vec();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: lp.objective_value(&values),
                values,
                duals: None,
            })
        }
        HighsModelStatus::Infeasible => Ok(LpSolution::non_optimal(LpStatus::Infeasible)),
        HighsModelStatus::Unbounded => Ok(LpSolution::non_optimal(LpStatus::Unbounded)),
        // presolve cannot always tell the two apart; the plain simplex can
        HighsModelStatus::UnboundedOrInfeasible if presolve => run(lp, false),
        other => Err(SolverError::Backend(format!("{other:?}"))),
    }
}
