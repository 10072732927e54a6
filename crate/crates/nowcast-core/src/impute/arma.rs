//! ARMA(p, q) estimation by conditional sum of squares and iterated
//! forecasting, used to extrapolate trailing missing values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::nelder_mead;
use crate::stats;

/// Minimum observations required to fit.
pub const MIN_FIT_OBS: usize = 8;

/// ARMA order with small maximum lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmaOrder {
    pub p: usize,
    pub q: usize,
}

impl ArmaOrder {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p > 2 || q > 2 {
            return Err(Error::Validation(format!(
                "ARMA order ({p},{q}) exceeds the maximum of 2 lags each"
            )));
        }
        if p + q == 0 {
            return Err(Error::Validation(
                "ARMA order must satisfy p + q >= 1".to_string(),
            ));
        }
        Ok(ArmaOrder { p, q })
    }
}

/// Fitted ARMA coefficients for one series.
///
/// The model is `x_t = c + sum_i ar[i] x_{t-i} + sum_j ma[j] e_{t-j} + e_t`,
/// so the unconditional mean is `c / (1 - sum(ar))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaFit {
    pub series_id: Option<String>,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub intercept: f64,
    pub innovation_variance: f64,
}

impl ArmaFit {
    /// Mean the iterated forecasts converge to.
    pub fn unconditional_mean(&self) -> f64 {
        self.intercept / (1.0 - self.ar.iter().sum::<f64>())
    }
}

/// Map partial autocorrelations in (-1, 1) to a stationary AR polynomial
/// (Monahan's recursion; exact for the p <= 2 used here).
fn pacf_to_coeffs(partials: &[f64]) -> Vec<f64> {
    let mut coeffs: Vec<f64> = Vec::with_capacity(partials.len());
    for (k, &r) in partials.iter().enumerate() {
        let prev = coeffs.clone();
        coeffs.push(0.0);
        for i in 0..k {
            coeffs[i] = prev[i] - r * prev[k - 1 - i];
        }
        coeffs[k] = r;
    }
    coeffs
}

fn unpack_params(z: &[f64], order: ArmaOrder) -> (Vec<f64>, Vec<f64>, f64) {
    let partials_ar: Vec<f64> = z[..order.p].iter().map(|v| v.tanh()).collect();
    let partials_ma: Vec<f64> = z[order.p..order.p + order.q].iter().map(|v| v.tanh()).collect();
    let ar = pacf_to_coeffs(&partials_ar);
    let ma = pacf_to_coeffs(&partials_ma);
    let intercept = z[order.p + order.q];
    (ar, ma, intercept)
}

/// Conditional sum of squares with pre-sample innovations set to zero.
fn css(values: &[f64], ar: &[f64], ma: &[f64], intercept: f64) -> f64 {
    let p = ar.len();
    let n = values.len();
    let mut errs = vec![0.0; n];
    let mut total = 0.0;
    for t in p..n {
        let mut pred = intercept;
        for (i, &phi) in ar.iter().enumerate() {
            pred += phi * values[t - 1 - i];
        }
        for (j, &theta) in ma.iter().enumerate() {
            if t >= j + 1 {
                pred += theta * errs[t - 1 - j];
            }
        }
        let e = values[t] - pred;
        errs[t] = e;
        total += e * e;
    }
    total
}

/// Fit ARMA coefficients to a contiguous sequence by minimizing the
/// conditional sum of squares under a stationarity (and invertibility)
/// constraint.
pub fn fit_arma(values: &[f64], order: ArmaOrder) -> Result<ArmaFit> {
    let n = values.len();
    if n < MIN_FIT_OBS {
        return Err(Error::TooFewForFit {
            needed: MIN_FIT_OBS,
            got: n,
        });
    }
    let sd = stats::sample_sd(values);
    let scale = stats::mean(values).abs().max(1.0);
    if !sd.is_finite() || sd < 1e-12 * scale {
        return Err(Error::DegenerateSeries);
    }

    let dim = order.p + order.q + 1;
    let mut x0 = vec![0.0; dim];
    x0[dim - 1] = stats::mean(values);

    let objective = |z: &[f64]| {
        let (ar, ma, intercept) = unpack_params(z, order);
        css(values, &ar, &ma, intercept)
    };

    const MAX_ITER: usize = 10_000;
    let result = nelder_mead(objective, &x0, 0.5, 1e-12, MAX_ITER);
    let (ar, ma, intercept) = unpack_params(&result.x, order);
    let innovation_variance = result.value / (n - order.p) as f64;
    let fit = ArmaFit {
        series_id: None,
        ar,
        ma,
        intercept,
        innovation_variance,
    };
    if !result.converged {
        return Err(Error::ArmaNonConvergence {
            iterations: result.iterations,
            objective: result.value,
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

/// Iterated h-step-ahead forecasts from the end of `history`.
///
/// In-sample innovations are reconstructed with the conditional recursion
/// (zeros before the start); future innovations are zero.
pub fn forecast(fit: &ArmaFit, history: &[f64], horizon: usize) -> Vec<f64> {
    let p = fit.ar.len();
    let n = history.len();

    let mut values: Vec<f64> = history.to_vec();
    let mut errs = vec![0.0; n];
    for t in p..n {
        let mut pred = fit.intercept;
        for (i, &phi) in fit.ar.iter().enumerate() {
            pred += phi * values[t - 1 - i];
        }
        for (j, &theta) in fit.ma.iter().enumerate() {
            if t >= j + 1 {
                pred += theta * errs[t - 1 - j];
            }
        }
        errs[t] = values[t] - pred;
    }

    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let t = values.len();
        let mut pred = fit.intercept;
        for (i, &phi) in fit.ar.iter().enumerate() {
            if t >= i + 1 {
                pred += phi * values[t - 1 - i];
            }
        }
        for (j, &theta) in fit.ma.iter().enumerate() {
            if t >= j + 1 && t - 1 - j < errs.len() {
                pred += theta * errs[t - 1 - j];
            }
        }
        values.push(pred);
        out.push(pred);
    }
    out
}
