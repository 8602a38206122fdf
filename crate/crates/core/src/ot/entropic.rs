//! Log-domain Sinkhorn scaling with an epsilon-scaling schedule.

use ndarray::Array2;

/// Result of the scaling loop at the target regularisation.
pub(crate) struct SinkhornState {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    pub total_iterations: usize,
    pub converged: bool,
    pub marginal_error: f64,
}

fn logsumexp(vals: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = vals.collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Regularised plan entry `mu_i nu_j exp((S_ij - w_i - v_j) / eps)`.
pub(crate) fn plan_entry(log_mu: f64, log_nu: f64, s: f64, w: f64, v: f64, eps: f64) -> f64 {
    (log_mu + log_nu + (s - w - v) / eps).exp()
}

/// Epsilon schedule: halve from 1.0 down to the target.
pub(crate) fn schedule(target: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = 1.0;
    while e > target {
        out.push(e);
        e *= 0.5;
    }
    out.push(target);
    out
}

pub(crate) fn sinkhorn(
    a: &[f64],
    b: &[f64],
    s: &Array2<f64>,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> SinkhornState {
    let (n, m) = s.dim();
    let log_a: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|v| v.ln()).collect();
    let mut w = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut total = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut err = f64::INFINITY;
    for eps in schedule(epsilon) {
        iterations = 0;
        converged = false;
        while iterations < max_iter {
            iterations += 1;
            total += 1;
            for i in 0..n {
                let row = s.row(i);
                w[i] = eps * logsumexp((0..m).map(|j| log_b[j] + (row[j] - v[j]) / eps));
            }
            for j in 0..m {
                let col = s.column(j);
                v[j] = eps * logsumexp((0..n).map(|i| log_a[i] + (col[i] - w[i]) / eps));
            }
            // Columns are exact after the v-update; measure the row error.
            err = (0..n)
                .map(|i| {
                    let row = s.row(i);
                    let mass: f64 = (0..m).map(|j| plan_entry(log_a[i], log_b[j], row[j], w[i], v[j], eps)).sum();
                    (mass - a[i]).abs()
                })
                .sum();
            if err <= tol {
                converged = true;
                break;
            }
        }
    }
    SinkhornState { w, v, iterations, total_iterations: total, converged, marginal_error: err }
}
