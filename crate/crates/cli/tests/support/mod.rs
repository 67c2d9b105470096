//! Brute-force references for the acceptance suite.

use gridroll_solver::{Sense, StandardFormLp};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

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

/// Best objective over every basic solution of `lp` that is feasible.
pub fn vertex_optimum(lp: &StandardFormLp) -> Option<f64> {
    let n = lp.num_cols();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        for bound in [lp.lower[j], lp.upper[j]] {
            if bound.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                planes.push((a, bound));
            }
        }
    }
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |pick| {
        let a = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].1).collect();
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

/// Feasible bounded LP with up to ten columns and ten rows. Rows pass
/// through a random interior point; a budget row keeps it bounded.
pub fn random_lp(rng: &mut ChaCha8Rng) -> StandardFormLp {
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

/// Every point with coordinates in `{0, +-1, +-frac(gamma)}` and L1 norm at
/// most `gamma`. The extreme points of the budget set are among them.
pub fn budget_points(n: usize, gamma: f64) -> Vec<Vec<f64>> {
    let frac = gamma - gamma.floor();
    let mut levels = vec![-1.0, 0.0, 1.0];
    if frac > 0.0 {
        levels.extend([-frac, frac]);
    }
    let mut points = vec![vec![]];
    for _ in 0..n {
        points = points
            .iter()
            .flat_map(|p: &Vec<f64>| {
                levels.iter().map(move |&l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    points.retain(|p| p.iter().map(|v| v.abs()).sum::<f64>() <= gamma + 1e-12);
    points
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}
