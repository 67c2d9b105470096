use crate::RobustError;

/// Worst case of `coeffs . u` over `{ |u|_inf <= 1, |u|_1 <= gamma }`.
///
/// For nonnegative coefficients this is the sum of the `floor(gamma)`
/// largest entries plus the fractional part of `gamma` times the next one.
pub fn support_budget(coeffs: &[f64], gamma: f64) -> Result<f64, RobustError> {
    let n = coeffs.len();
    if !(gamma >= 0.0 && gamma <= n as f64) {
        return Err(RobustError::InvalidGamma { gamma, dimension: n });
    }
    if let Some(&bad) = coeffs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(RobustError::InvalidScenario(format!("budget coefficient {bad} is not a nonnegative number")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coeffs[b].total_cmp(&coeffs[a]).then(a.cmp(&b)));
    let whole = gamma.floor() as usize;
    // summed in index order so that gamma = n reproduces the plain sum
    let mut chosen = order[..whole].to_vec();
    chosen.sort_unstable();
    let mut total: f64 = chosen.iter().map(|&i| coeffs[i]).sum();
    let frac = gamma - whole as f64;
    if frac > 0.0 {
        total += frac * coeffs[order[whole]];
    }
    Ok(total)
}
