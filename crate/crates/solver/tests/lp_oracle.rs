use gridroll_solver::{
    solve_lp, solve_lp_with, Backend, LpStatus, Sense, SolverError, SolverOptions, StandardFormLp,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hyperplane `a.x = b` candidate for a vertex.
struct Plane {
    a: Vec<f64>,
    b: f64,
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
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

fn combinations(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Brute-force optimum over all vertices of a pointed, bounded polyhedron.
/// Returns `None` when no vertex is feasible.
fn vertex_optimum(lp: &StandardFormLp) -> Option<f64> {
    let n = lp.num_cols();
    // equalities are active everywhere, so they are just candidate planes too
    let mut planes = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        planes.push(Plane { a, b: row.rhs });
    }
    for j in 0..n {
        for bound in [lp.lower[j], lp.upper[j]] {
            if bound.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                planes.push(Plane { a, b: bound });
            }
        }
    }
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |pick| {
        let a = pick.iter().map(|&i| planes[i].a.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].b).collect();
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

/// Random feasible bounded LP: rows are built around a random interior
/// point, and a budget row `sum x <= B` keeps the region bounded.
fn random_lp(rng: &mut ChaCha8Rng) -> StandardFormLp {
    let n = rng.random_range(1..=10usize);
    let m = rng.random_range(1..=10usize);
    let point: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
    let mut lp = StandardFormLp::new();
    for &p in &point {
        let upper = if rng.random_bool(0.25) { p + rng.random_range(0.0..2.0) } else { f64::INFINITY };
        lp.add_col(rng.random_range(-5.0..5.0), 0.0, upper);
    }
    let total: f64 = point.iter().sum();
    lp.add_row((0..n).map(|j| (j, 1.0)).collect(), Sense::Le, total + rng.random_range(0.5..4.0));
    let mut equalities = 0;
    for _ in 1..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                let a = rng.random_range(-3.0..3.0_f64).round();
                if a != 0.0 {
                    coeffs.push((j, a));
                }
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let lhs: f64 = coeffs.iter().map(|&(j, a)| a * point[j]).sum();
        let kind = rng.random_range(0..10);
        let (sense, rhs) = if kind < 5 {
            (Sense::Le, lhs + rng.random_range(0.0..2.0))
        } else if kind < 9 || equalities >= 2 {
            (Sense::Ge, lhs - rng.random_range(0.0..2.0))
        } else {
            equalities += 1;
            (Sense::Eq, lhs)
        };
        lp.add_row(coeffs, sense, rhs);
    }
    lp
}

/// Dual feasibility and complementary slackness for `min c.x` with row
/// multipliers `y` (reduced costs `d = c - A^T y`).
fn check_kkt(lp: &StandardFormLp, x: &[f64], y: &[f64], tol: f64) {
    let n = lp.num_cols();
    let mut d = lp.objective.clone();
    for (row, &yi) in lp.rows.iter().zip(y) {
        for &(j, a) in &row.coeffs {
            d[j] -= a * yi;
        }
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        let slack = lhs - row.rhs;
        match row.sense {
            Sense::Le => assert!(yi <= tol, "<= row dual {yi} must be nonpositive"),
            Sense::Ge => assert!(yi >= -tol, ">= row dual {yi} must be nonnegative"),
            Sense::Eq => {}
        }
        assert!((yi * slack).abs() <= tol * (1.0 + yi.abs()), "complementary slackness on row: y={yi} slack={slack}");
    }
    for j in 0..n {
        let at_lower = (x[j] - lp.lower[j]).abs() <= 1e-7;
        let at_upper = (x[j] - lp.upper[j]).abs() <= 1e-7;
        if !at_lower && !at_upper {
            assert!(d[j].abs() <= tol, "basic column {j} has reduced cost {}", d[j]);
        } else if at_lower && !at_upper {
            assert!(d[j] >= -tol, "column {j} at lower with reduced cost {}", d[j]);
        } else if at_upper && !at_lower {
            assert!(d[j] <= tol, "column {j} at upper with reduced cost {}", d[j]);
        }
    }
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let dense = SolverOptions { backend: Backend::Dense, ..SolverOptions::default() };
    let sparse = SolverOptions { backend: Backend::Sparse, ..SolverOptions::default() };
    for case in 0..200 {
        let lp = random_lp(&mut rng);
        let expected = vertex_optimum(&lp).expect("generated LPs are feasible");
        let sol = solve_lp_with(&lp, &dense).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        assert!((sol.objective - expected).abs() <= 1e-6, "case {case}: dense {} vs oracle {}", sol.objective, expected);
        assert!(lp.max_violation(&sol.values) <= 1e-7, "case {case}");
        check_kkt(&lp, &sol.values, sol.duals.as_ref().unwrap(), 1e-7);

        let sol = solve_lp_with(&lp, &sparse).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        assert!((sol.objective - expected).abs() <= 1e-6, "case {case}: sparse {} vs oracle {}", sol.objective, expected);
    }
}

#[test]
fn bounded_single_variable() {
    let mut lp = StandardFormLp::new();
    lp.add_col(-1.0, 0.0, 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_eq!(sol.values, vec![1.0]);
    assert_eq!(sol.objective, -1.0);
}

#[test]
fn simplex_edge_optimum() {
    let mut lp = StandardFormLp::new();
    let x = lp.add_col(-1.0, 0.0, f64::INFINITY);
    let y = lp.add_col(-1.0, 0.0, f64::INFINITY);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.objective + 1.0).abs() < 1e-12);
    assert!((sol.values[0] + sol.values[1] - 1.0).abs() < 1e-12);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut lp = StandardFormLp::new();
    let x = lp.add_col(0.0, f64::NEG_INFINITY, f64::INFINITY);
    lp.add_row(vec![(x, 1.0)], Sense::Ge, 2.0);
    lp.add_row(vec![(x, 1.0)], Sense::Le, 1.0);
    for backend in [Backend::Dense, Backend::Sparse] {
        let opts = SolverOptions { backend, ..SolverOptions::default() };
        assert_eq!(solve_lp_with(&lp, &opts).unwrap().status, LpStatus::Infeasible);
    }
}

#[test]
fn unbounded_ray_is_reported() {
    let mut lp = StandardFormLp::new();
    let x = lp.add_col(-1.0, 0.0, f64::INFINITY);
    let y = lp.add_col(0.0, 0.0, f64::INFINITY);
    lp.add_row(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
    for backend in [Backend::Dense, Backend::Sparse] {
        let opts = SolverOptions { backend, ..SolverOptions::default() };
        assert_eq!(solve_lp_with(&lp, &opts).unwrap().status, LpStatus::Unbounded);
    }
}

#[test]
fn free_and_upper_only_columns() {
    // min x - y  s.t.  x + y = 1, x free, y <= 0.25
    let mut lp = StandardFormLp::new();
    let x = lp.add_col(1.0, f64::NEG_INFINITY, f64::INFINITY);
    let y = lp.add_col(-1.0, f64::NEG_INFINITY, 0.25);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.values[1] - 0.25).abs() < 1e-12);
    assert!((sol.values[0] - 0.75).abs() < 1e-12);
    assert!((sol.objective - 0.5).abs() < 1e-12);
}

/// Beale's example cycles under textbook Dantzig pricing.
fn beale() -> StandardFormLp {
    let mut lp = StandardFormLp::new();
    let x4 = lp.add_col(-0.75, 0.0, f64::INFINITY);
    let x5 = lp.add_col(20.0, 0.0, f64::INFINITY);
    let x6 = lp.add_col(-0.5, 0.0, f64::INFINITY);
    let x7 = lp.add_col(6.0, 0.0, f64::INFINITY);
    lp.add_row(vec![(x4, 0.25), (x5, -8.0), (x6, -1.0), (x7, 9.0)], Sense::Le, 0.0);
    lp.add_row(vec![(x4, 0.5), (x5, -12.0), (x6, -0.5), (x7, 3.0)], Sense::Le, 0.0);
    lp.add_row(vec![(x6, 1.0)], Sense::Le, 1.0);
    lp
}

#[test]
fn degenerate_instance_terminates() {
    for stall_threshold in [0, 3, 50] {
        let opts = SolverOptions {
            backend: Backend::Dense,
            stall_threshold,
            max_iterations: 10_000,
            ..SolverOptions::default()
        };
        let sol = solve_lp_with(&beale(), &opts).unwrap();
        assert!((sol.objective + 1.25).abs() < 1e-9, "threshold {stall_threshold}: {}", sol.objective);
    }
    // without the Bland fallback, Dantzig pricing cycles on this instance
    let opts = SolverOptions {
        backend: Backend::Dense,
        stall_threshold: usize::MAX,
        max_iterations: 10_000,
        ..SolverOptions::default()
    };
    assert!(matches!(solve_lp_with(&beale(), &opts), Err(SolverError::IterationLimit(_))));
}

#[test]
fn pivoting_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let lp = random_lp(&mut rng);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a, b);
    }
}
