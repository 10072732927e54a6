//! Shared oracles for integration tests.
//!
//! The Gaussian oracle builds the exact joint distribution of the observed
//! cells implied by the single-factor model — by direct recursion on the
//! factor autocovariance — and evaluates log-densities and conditional
//! moments with dense linear algebra. It shares no code with the Kalman
//! recursion it checks.

use nalgebra::{DMatrix, DVector};

use nowcast_core::dataset::MixedFrequencyDataset;
use nowcast_core::dfm::{StateSpaceModel, INITIAL_FACTOR_VAR};

/// Factor autocovariance `G[t][s] = Cov(f_t, f_s)` for `t_len` periods,
/// from `Var(f_0) = INITIAL_FACTOR_VAR` and the AR(1) recursion.
pub fn factor_cov(phi: f64, factor_var: f64, t_len: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; t_len]; t_len];
    g[0][0] = INITIAL_FACTOR_VAR;
    for t in 1..t_len {
        g[t][t] = phi * phi * g[t - 1][t - 1] + factor_var;
        for s in 0..t {
            g[t][s] = phi * g[t - 1][s];
            g[s][t] = g[t][s];
        }
    }
    g
}

/// Exact log-likelihood and smoothed factor moments for the observed cells
/// of `ds` under `ssm`, by joint-Gaussian conditioning.
pub struct OracleResult {
    pub log_likelihood: f64,
    pub smoothed_mean: Vec<f64>,
    pub smoothed_var: Vec<f64>,
}

pub fn gaussian_oracle(ssm: &StateSpaceModel, ds: &MixedFrequencyDataset) -> OracleResult {
    let t_len = ds.n_rows();
    let g = factor_cov(ssm.phi(), ssm.factor_var(), t_len);
    let std = ssm.standardization();

    // Observed cells in (row, col) order with standardized values.
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for row in 0..t_len {
        for col in 0..ds.n_cols() {
            if let Some(v) = ds.value(row, col) {
                cells.push((row, col, (v - std.mean[col]) / std.sd[col]));
            }
        }
    }
    let k = cells.len();
    assert!(k > 0, "oracle needs at least one observed cell");

    let lambda = ssm.loadings();
    let idio = ssm.idio_var();

    let mut sigma = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let (t_i, c_i, _) = cells[i];
        for j in 0..k {
            let (t_j, c_j, _) = cells[j];
            let mut v = lambda[c_i] * lambda[c_j] * g[t_i][t_j];
            if i == j {
                v += idio[c_i];
            }
            sigma[(i, j)] = v;
        }
    }
    let y = DVector::<f64>::from_iterator(k, cells.iter().map(|&(_, _, v)| v));

    let chol = sigma
        .clone()
        .cholesky()
        .expect("oracle covariance must be positive definite");
    let alpha = chol.solve(&y);
    let mut logdet = 0.0;
    for i in 0..k {
        logdet += 2.0 * chol.l()[(i, i)].ln();
    }
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let log_likelihood = -0.5 * (k as f64 * ln_2pi + logdet + y.dot(&alpha));

    // E[f_t | y] = c_t' Sigma^{-1} y and Var[f_t | y] = G[t][t] - c_t' Sigma^{-1} c_t
    // with c_t[i] = Cov(f_t, y_i) = lambda_{col(i)} G[t][t_i].
    let mut smoothed_mean = Vec::with_capacity(t_len);
    let mut smoothed_var = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let c_t = DVector::<f64>::from_iterator(
            k,
            cells.iter().map(|&(t_i, c_i, _)| lambda[c_i] * g[t][t_i]),
        );
        let solved = chol.solve(&c_t);
        smoothed_mean.push(c_t.dot(&alpha));
        smoothed_var.push(g[t][t] - c_t.dot(&solved));
    }

    OracleResult {
        log_likelihood,
        smoothed_mean,
        smoothed_var,
    }
}
