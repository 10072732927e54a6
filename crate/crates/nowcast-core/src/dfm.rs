//! Single-factor dynamic factor model: state-space form, missing-data
//! Kalman filter/smoother, EM estimation, and nowcast extraction.
//!
//! The latent factor follows a scalar AR(1); every column loads on it at
//! the rows where that column carries data (quarter-end rows for quarterly
//! columns) and adds idiosyncratic white noise:
//!
//! ```text
//! f_t = phi f_{t-1} + eta_t,        eta_t ~ N(0, factor_var)
//! y_it = lambda_i f_t + eps_it,     eps_it ~ N(0, idio_var_i)
//! ```
//!
//! Columns are standardized internally for estimation; nowcasts are
//! de-standardized on output. Observation noise is diagonal, so each
//! period's update processes the observed components one at a time —
//! algebraically identical to the joint update and free of matrix algebra.

use serde::{Deserialize, Serialize};

use crate::dataset::MixedFrequencyDataset;
use crate::error::{Error, Result};
use crate::nowcaster::Nowcaster;
use crate::period::Quarter;

/// Prior variance of the factor at the first grid row. Fixed (rather than
/// the stationary variance) so the EM M-step stays closed-form and the
/// likelihood is monotone in the iterates; data are standardized, so unit
/// scale is the natural choice.
pub const INITIAL_FACTOR_VAR: f64 = 1.0;

/// Per-column standardization statistics frozen at estimation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardization {
    pub fn identity(n: usize) -> Self {
        Standardization {
            mean: vec![0.0; n],
            sd: vec![1.0; n],
        }
    }
}

/// Parameters of the single-factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceModel {
    columns: Vec<String>,
    loadings: Vec<f64>,
    phi: f64,
    factor_var: f64,
    idio_var: Vec<f64>,
    standardization: Standardization,
}

impl StateSpaceModel {
    pub fn new(
        columns: Vec<String>,
        loadings: Vec<f64>,
        phi: f64,
        factor_var: f64,
        idio_var: Vec<f64>,
        standardization: Standardization,
    ) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::Validation("model needs at least one column".to_string()));
        }
        if loadings.len() != n || idio_var.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} columns but {} loadings and {} idiosyncratic variances",
                loadings.len(),
                idio_var.len()
            )));
        }
        if standardization.mean.len() != n || standardization.sd.len() != n {
            return Err(Error::DimensionMismatch(
                "standardization length differs from column count".to_string(),
            ));
        }
        if !(phi.abs() < 1.0) {
            return Err(Error::Validation(format!(
                "factor AR coefficient must satisfy |phi| < 1, got {phi}"
            )));
        }
        if !(factor_var > 0.0) {
            return Err(Error::Validation(
                "factor innovation variance must be positive".to_string(),
            ));
        }
        if idio_var.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation(
                "idiosyncratic variances must be finite and non-negative".to_string(),
            ));
        }
        if loadings.iter().all(|&l| l == 0.0) {
            return Err(Error::Validation(
                "loadings must not be identically zero".to_string(),
            ));
        }
        if standardization.sd.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Validation(
                "standardization deviations must be positive".to_string(),
            ));
        }
        let mut model = StateSpaceModel {
            columns,
            loadings,
            phi,
            factor_var,
            idio_var,
            standardization,
        };
        model.apply_sign_convention();
        Ok(model)
    }

    /// Make the representative unique: first nonzero loading positive.
    /// Flipping all loadings together flips the (unobserved) factor sign
    /// and leaves the likelihood unchanged.
    fn apply_sign_convention(&mut self) {
        if let Some(first) = self.loadings.iter().find(|l| **l != 0.0) {
            if *first < 0.0 {
                for l in &mut self.loadings {
                    *l = -*l;
                }
            }
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn loadings(&self) -> &[f64] {
        &self.loadings
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn factor_var(&self) -> f64 {
        self.factor_var
    }

    pub fn idio_var(&self) -> &[f64] {
        &self.idio_var
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let m: StateSpaceModel = serde_json::from_str(json)?;
        StateSpaceModel::new(
            m.columns,
            m.loadings,
            m.phi,
            m.factor_var,
            m.idio_var,
            m.standardization,
        )
    }

    fn check_columns(&self, ds: &MixedFrequencyDataset) -> Result<()> {
        let ds_cols: Vec<&str> = ds.column_ids().collect();
        let my_cols: Vec<&str> = self.columns.iter().map(|s| s.as_str()).collect();
        if ds_cols != my_cols {
            return Err(Error::ColumnMismatch(format!(
                "model columns {my_cols:?} vs dataset columns {ds_cols:?}"
            )));
        }
        Ok(())
    }

    /// Standardized observation or `None` if the cell is missing.
    fn standardized(&self, ds: &MixedFrequencyDataset, row: usize, col: usize) -> Option<f64> {
        ds.value(row, col)
            .map(|v| (v - self.standardization.mean[col]) / self.standardization.sd[col])
    }
}

/// Per-period filter moments and the total Gaussian log-likelihood.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub predicted_mean: Vec<f64>,
    pub predicted_var: Vec<f64>,
    pub filtered_mean: Vec<f64>,
    pub filtered_var: Vec<f64>,
    pub log_likelihood: f64,
}

/// Smoothed moments plus the lag-one covariances the EM update needs.
#[derive(Debug, Clone)]
pub struct SmootherOutput {
    pub smoothed_mean: Vec<f64>,
    pub smoothed_var: Vec<f64>,
    /// `lag_one_cov[t] = Cov(f_t, f_{t-1} | all data)`; index 0 is unused.
    pub lag_one_cov: Vec<f64>,
    pub filter: FilterOutput,
}

/// Linear-Gaussian filter over the scalar AR(1) factor. Missing cells are
/// skipped; periods with no observed column perform prediction only. The
/// log-likelihood sums per-observation Gaussian innovations.
pub fn kalman_filter(ssm: &StateSpaceModel, ds: &MixedFrequencyDataset) -> Result<FilterOutput> {
    ssm.check_columns(ds)?;
    let t_len = ds.n_rows();
    let n_cols = ssm.columns.len();
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();

    let mut out = FilterOutput {
        predicted_mean: Vec::with_capacity(t_len),
        predicted_var: Vec::with_capacity(t_len),
        filtered_mean: Vec::with_capacity(t_len),
        filtered_var: Vec::with_capacity(t_len),
        log_likelihood: 0.0,
    };

    let mut mean = 0.0;
    let mut var = INITIAL_FACTOR_VAR;
    for row in 0..t_len {
        if row > 0 {
            mean = ssm.phi * mean;
            var = ssm.phi * ssm.phi * var + ssm.factor_var;
        }
        out.predicted_mean.push(mean);
        out.predicted_var.push(var);

        for col in 0..n_cols {
            let Some(y) = ssm.standardized(ds, row, col) else {
                continue;
            };
            let lambda = ssm.loadings[col];
            let r = ssm.idio_var[col];
            let s = lambda * lambda * var + r;
            let innovation = y - lambda * mean;
            if !(s > 0.0) || !s.is_finite() || !innovation.is_finite() {
                return Err(Error::NonFiniteFilter {
                    period: ds.period_of_row(row),
                });
            }
            out.log_likelihood -=
                0.5 * (ln_2pi + s.ln() + innovation * innovation / s);
            let gain = var * lambda / s;
            mean += gain * innovation;
            // Joseph-form scalar update, stable for r = 0.
            let one_minus = 1.0 - gain * lambda;
            var = one_minus * one_minus * var + gain * gain * r;
        }
        if !mean.is_finite() || !var.is_finite() {
            return Err(Error::NonFiniteFilter {
                period: ds.period_of_row(row),
            });
        }
        out.filtered_mean.push(mean);
        out.filtered_var.push(var);
    }
    Ok(out)
}

/// Fixed-interval (RTS) smoothing over the filter output.
pub fn kalman_smoother(
    ssm: &StateSpaceModel,
    ds: &MixedFrequencyDataset,
) -> Result<SmootherOutput> {
    let filter = kalman_filter(ssm, ds)?;
    let t_len = filter.filtered_mean.len();
    let mut smoothed_mean = filter.filtered_mean.clone();
    let mut smoothed_var = filter.filtered_var.clone();
    let mut lag_one_cov = vec![0.0; t_len];

    for t in (0..t_len.saturating_sub(1)).rev() {
        let p_pred_next = filter.predicted_var[t + 1];
        // p_pred_next = phi^2 p_filt + factor_var > 0 because factor_var > 0.
        let j = filter.filtered_var[t] * ssm.phi / p_pred_next;
        smoothed_mean[t] = filter.filtered_mean[t]
            + j * (smoothed_mean[t + 1] - filter.predicted_mean[t + 1]);
        smoothed_var[t] =
            filter.filtered_var[t] + j * j * (smoothed_var[t + 1] - p_pred_next);
        lag_one_cov[t + 1] = j * smoothed_var[t + 1];
    }
    Ok(SmootherOutput {
        smoothed_mean,
        smoothed_var,
        lag_one_cov,
        filter,
    })
}

/// Result of an EM fit.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: StateSpaceModel,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood after each iteration, starting with the initial model.
    pub history: Vec<f64>,
}

fn default_init(ds: &MixedFrequencyDataset, std: &Standardization) -> Result<StateSpaceModel> {
    let n_cols = ds.n_cols();
    let t_len = ds.n_rows();

    // Mean-filled standardized matrix: missing cells become 0.
    let x: Vec<Vec<f64>> = (0..t_len)
        .map(|row| {
            (0..n_cols)
                .map(|col| {
                    ds.value(row, col)
                        .map(|v| (v - std.mean[col]) / std.sd[col])
                        .unwrap_or(0.0)
                })
                .collect()
        })
        .collect();

    // First principal component by power iteration on X'X.
    let mut w = vec![1.0 / (n_cols as f64).sqrt(); n_cols];
    for _ in 0..100 {
        let mut next = vec![0.0; n_cols];
        for row in &x {
            let score: f64 = row.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            for (dst, &v) in next.iter_mut().zip(row.iter()) {
                *dst += score * v;
            }
        }
        let norm: f64 = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            break;
        }
        for v in &mut next {
            *v /= norm;
        }
        w = next;
    }

    // Factor scores scaled to unit variance, loadings by regression.
    let mut scores: Vec<f64> = x
        .iter()
        .map(|row| row.iter().zip(w.iter()).map(|(a, b)| a * b).sum())
        .collect();
    let score_var = scores.iter().map(|s| s * s).sum::<f64>() / t_len as f64;
    if score_var > 1e-12 {
        let scale = score_var.sqrt();
        for s in &mut scores {
            *s /= scale;
        }
    }
    let mut loadings = vec![0.0; n_cols];
    let mut idio_var = vec![0.0; n_cols];
    let denom: f64 = scores.iter().map(|s| s * s).sum();
    for col in 0..n_cols {
        let num: f64 = (0..t_len).map(|row| x[row][col] * scores[row]).sum();
        loadings[col] = if denom > 1e-12 { num / denom } else { 0.1 };
        let resid: f64 = (0..t_len)
            .map(|row| {
                let e = x[row][col] - loadings[col] * scores[row];
                e * e
            })
            .sum::<f64>()
            / t_len as f64;
        idio_var[col] = resid.max(1e-4);
    }
    if loadings.iter().all(|&l| l == 0.0) {
        loadings[0] = 0.1;
    }

    StateSpaceModel::new(
        ds.column_ids().map(str::to_string).collect(),
        loadings,
        0.5,
        1.0,
        idio_var,
        std.clone(),
    )
}

/// Standardization statistics over each column's observed cells.
fn column_stats(ds: &MixedFrequencyDataset) -> Result<Standardization> {
    let mut mean = Vec::with_capacity(ds.n_cols());
    let mut sd = Vec::with_capacity(ds.n_cols());
    for col in 0..ds.n_cols() {
        let obs = ds.observed_cells(col);
        let id = &ds.columns()[col].id;
        if obs.len() < 8 {
            return Err(Error::for_column(
                id,
                Error::TooFewForFit {
                    needed: 8,
                    got: obs.len(),
                },
            ));
        }
        let m = obs.iter().map(|(_, v)| v).sum::<f64>() / obs.len() as f64;
        let var = obs.iter().map(|(_, v)| (v - m) * (v - m)).sum::<f64>() / obs.len() as f64;
        if var < 1e-24 {
            return Err(Error::for_column(id, Error::DegenerateSeries));
        }
        mean.push(m);
        sd.push(var.sqrt());
    }
    Ok(Standardization { mean, sd })
}

/// Maximum likelihood by EM: E-step smoothing, closed-form M-step updates
/// for loadings, idiosyncratic variances, and the factor AR coefficient.
///
/// The factor innovation variance is pinned at 1 as the scale
/// identification: loadings absorb the factor scale. Without this
/// restriction the likelihood is flat along `(lambda k, var/k^2)` and EM
/// crawls along the ridge instead of converging.
pub fn em_fit(
    ds: &MixedFrequencyDataset,
    init: Option<StateSpaceModel>,
    max_iter: usize,
    tol: f64,
) -> Result<EmFit> {
    if ds.n_cols() < 2 {
        return Err(Error::Validation(
            "EM estimation needs at least 2 columns".to_string(),
        ));
    }
    let std = match &init {
        Some(model) => model.standardization().clone(),
        None => column_stats(ds)?,
    };
    let mut model = match init {
        Some(model) => {
            model.check_columns(ds)?;
            model
        }
        None => default_init(ds, &std)?,
    };

    let t_len = ds.n_rows();
    let n_cols = ds.n_cols();
    let mut history = Vec::with_capacity(max_iter + 1);
    let mut ll_prev = kalman_filter(&model, ds)?.log_likelihood;
    history.push(ll_prev);

    let mut iterations = 0;
    for iter in 1..=max_iter {
        iterations = iter;
        let smooth = kalman_smoother(&model, ds)?;
        // Posterior moments: a = E[f], b = E[f^2], c_t = E[f_t f_{t-1}].
        let a = &smooth.smoothed_mean;
        let b: Vec<f64> = (0..t_len)
            .map(|t| smooth.smoothed_var[t] + a[t] * a[t])
            .collect();
        let c: Vec<f64> = (0..t_len)
            .map(|t| {
                if t == 0 {
                    0.0
                } else {
                    smooth.lag_one_cov[t] + a[t] * a[t - 1]
                }
            })
            .collect();

        let mut loadings = vec![0.0; n_cols];
        let mut idio_var = vec![0.0; n_cols];
        for col in 0..n_cols {
            let mut num = 0.0;
            let mut den = 0.0;
            let mut count = 0usize;
            for row in 0..t_len {
                if let Some(y) = model.standardized(ds, row, col) {
                    num += y * a[row];
                    den += b[row];
                    count += 1;
                }
            }
            let lambda = if den > 0.0 { num / den } else { 0.0 };
            let mut resid = 0.0;
            for row in 0..t_len {
                if let Some(y) = model.standardized(ds, row, col) {
                    resid += y * y - 2.0 * y * lambda * a[row] + lambda * lambda * b[row];
                }
            }
            let r = resid / count as f64;
            if r < 1e-12 {
                return Err(Error::VarianceCollapse(ds.columns()[col].id.clone()));
            }
            loadings[col] = lambda;
            idio_var[col] = r;
        }

        let num_phi: f64 = (1..t_len).map(|t| c[t]).sum();
        let den_phi: f64 = (1..t_len).map(|t| b[t - 1]).sum();
        let mut phi = if den_phi > 0.0 { num_phi / den_phi } else { 0.0 };
        if phi.abs() >= 1.0 {
            phi = phi.signum() * 0.9999;
        }

        model = StateSpaceModel {
            columns: model.columns,
            loadings,
            phi,
            factor_var: 1.0,
            idio_var,
            standardization: model.standardization,
        };

        let ll = kalman_filter(&model, ds)?.log_likelihood;
        history.push(ll);
        if ll < ll_prev - 1e-8 {
            return Err(Error::EmLikelihoodDecreased {
                iteration: iter,
                drop: ll_prev - ll,
            });
        }
        let improved = ll - ll_prev;
        ll_prev = ll;
        if improved.abs() < tol {
            break;
        }
    }

    model.apply_sign_convention();
    Ok(EmFit {
        model,
        iterations,
        log_likelihood: ll_prev,
        history,
    })
}

/// Nowcast: run the smoother through the vintage (the target column's own
/// observed history participates) and read off the target loading times the
/// smoothed factor mean at the quarter-end month. For a row with no
/// observations in or after it, that mean is the pure prediction.
pub fn dfm_nowcast(
    ssm: &StateSpaceModel,
    vintage: &MixedFrequencyDataset,
    target: Quarter,
) -> Result<f64> {
    let end_period = target.end_month();
    let extended = vintage.extend_to(end_period);
    let Some(row) = extended.row_of_period(end_period) else {
        return Err(Error::WindowBeforeGrid {
            grid_start: extended.start(),
        });
    };
    let smooth = kalman_smoother(ssm, &extended)?;
    let target_col = extended.target_index();
    let standardized = ssm.loadings[target_col] * smooth.smoothed_mean[row];
    Ok(ssm.standardization.mean[target_col]
        + ssm.standardization.sd[target_col] * standardized)
}

impl Nowcaster for StateSpaceModel {
    fn model_id(&self) -> &str {
        "dfm"
    }

    fn predict(&self, vintage: &MixedFrequencyDataset, target: Quarter) -> Result<f64> {
        dfm_nowcast(self, vintage, target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::period::Period;
    use crate::series::{Frequency, Series};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Single quarterly column that is its own target.
    fn single_column_ds(obs: &[(Period, f64)], end: Period) -> MixedFrequencyDataset {
        let series = vec![Series::new("gdp", Frequency::Quarterly, obs.iter().copied()).unwrap()];
        MixedFrequencyDataset::align(&series, (Period::new(2020, 1), end), "gdp", false).unwrap()
    }

    fn noiseless_model(phi: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            vec!["gdp".to_string()],
            vec![1.0],
            phi,
            0.25,
            vec![0.0],
            Standardization::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn noiseless_filter_tracks_observations() {
        let ds = single_column_ds(
            &[
                (Period::new(2020, 3), 0.7),
                (Period::new(2020, 6), -0.4),
                (Period::new(2020, 9), 0.2),
            ],
            Period::new(2020, 9),
        );
        let out = kalman_filter(&noiseless_model(0.0), &ds).unwrap();
        assert!((out.filtered_mean[2] - 0.7).abs() < 1e-12);
        assert!((out.filtered_mean[5] + 0.4).abs() < 1e-12);
        assert!((out.filtered_mean[8] - 0.2).abs() < 1e-12);
        assert!(out.filtered_var[2].abs() < 1e-12);
    }

    #[test]
    fn all_missing_period_inflates_filtered_variance() {
        // phi = 0.8, factor_var = 0.36: stationary variance 1. After any
        // update the filtered variance drops below 1, so prediction-only
        // periods strictly inflate it.
        let model = StateSpaceModel::new(
            vec!["gdp".to_string()],
            vec![1.0],
            0.8,
            0.36,
            vec![0.5],
            Standardization::identity(1),
        )
        .unwrap();
        let ds = single_column_ds(
            &[(Period::new(2020, 3), 0.7)],
            Period::new(2020, 5),
        );
        let out = kalman_filter(&model, &ds).unwrap();
        // Rows 3 and 4 (April, May) have no observations.
        assert!(out.filtered_var[3] > out.filtered_var[2]);
        assert!(out.filtered_var[4] > out.filtered_var[3]);
        assert_eq!(out.filtered_mean[3], out.predicted_mean[3]);
    }

    #[test]
    fn smoother_boundary_equals_filter() {
        let model = StateSpaceModel::new(
            vec!["gdp".to_string()],
            vec![0.9],
            0.5,
            0.4,
            vec![0.3],
            Standardization::identity(1),
        )
        .unwrap();
        let ds = single_column_ds(
            &[
                (Period::new(2020, 3), 0.7),
                (Period::new(2020, 6), -0.4),
            ],
            Period::new(2020, 6),
        );
        let smooth = kalman_smoother(&model, &ds).unwrap();
        let last = smooth.smoothed_mean.len() - 1;
        assert_eq!(smooth.smoothed_mean[last], smooth.filter.filtered_mean[last]);
        assert_eq!(smooth.smoothed_var[last], smooth.filter.filtered_var[last]);
        // Smoothed variances never exceed filtered variances.
        for t in 0..=last {
            assert!(smooth.smoothed_var[t] <= smooth.filter.filtered_var[t] + 1e-12);
        }
    }

    #[test]
    fn noiseless_smoother_reproduces_observations() {
        let ds = single_column_ds(
            &[
                (Period::new(2020, 3), 0.7),
                (Period::new(2020, 6), -0.4),
            ],
            Period::new(2020, 6),
        );
        let smooth = kalman_smoother(&noiseless_model(0.3), &ds).unwrap();
        assert!((smooth.smoothed_mean[2] - 0.7).abs() < 1e-12);
        assert!((smooth.smoothed_mean[5] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn nowcast_propagates_last_observation_by_phi() {
        let phi = 0.8;
        let model = noiseless_model(phi);
        let ds = single_column_ds(
            &[
                (Period::new(2020, 3), 0.5),
                (Period::new(2020, 6), 1.0),
            ],
            Period::new(2020, 6),
        );
        // Target 2020Q3 ends 3 rows past the last observation.
        let nowcast = dfm_nowcast(&model, &ds, Quarter::new(2020, 3)).unwrap();
        assert!((nowcast - phi.powi(3) * 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_loading_column_does_not_move_the_nowcast() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let start = Period::new(2019, 1);
        let months = 36;
        let noise: Vec<(Period, f64)> = (0..months)
            .map(|m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (start.add_months(m as i64), z)
            })
            .collect();
        let informative: Vec<(Period, f64)> = (0..months)
            .map(|m| (start.add_months(m as i64), ((m as f64) * 0.4).sin()))
            .collect();
        let target_obs: Vec<(Period, f64)> = (0..months)
            .map(|m| (start.add_months(m as i64), ((m as f64) * 0.4).sin() * 0.8))
            .filter(|(p, _)| p.is_quarter_end())
            .collect();
        let end = start.add_months(months as i64 - 1);

        let with_noise = MixedFrequencyDataset::align(
            &[
                Series::new("x", Frequency::Monthly, informative.clone()).unwrap(),
                Series::new("junk", Frequency::Monthly, noise).unwrap(),
                Series::new("gdp", Frequency::Quarterly, target_obs.clone()).unwrap(),
            ],
            (start, end),
            "gdp",
            false,
        )
        .unwrap();
        let without = MixedFrequencyDataset::align(
            &[
                Series::new("x", Frequency::Monthly, informative).unwrap(),
                Series::new("gdp", Frequency::Quarterly, target_obs).unwrap(),
            ],
            (start, end),
            "gdp",
            false,
        )
        .unwrap();

        let model3 = StateSpaceModel::new(
            vec!["x".into(), "junk".into(), "gdp".into()],
            vec![0.9, 0.0, 0.7],
            0.6,
            0.5,
            vec![0.2, 0.4, 0.3],
            Standardization::identity(3),
        )
        .unwrap();
        let model2 = StateSpaceModel::new(
            vec!["x".into(), "gdp".into()],
            vec![0.9, 0.7],
            0.6,
            0.5,
            vec![0.2, 0.3],
            Standardization::identity(2),
        )
        .unwrap();

        let target = Quarter::new(2022, 1);
        let with = dfm_nowcast(&model3, &with_noise, target).unwrap();
        let wo = dfm_nowcast(&model2, &without, target).unwrap();
        assert!((with - wo).abs() < 1e-10);
    }

    #[test]
    fn em_monotone_and_recovers_dgp() {
        // 5 columns, T = 300, single factor with phi = 0.7. Loadings and
        // idiosyncratic variances chosen so every column has unit variance.
        let phi_true: f64 = 0.7;
        let loadings_true = [0.9, 0.8, 0.7, 0.6, 0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let t_len = 300usize;
        let mut factor = Vec::with_capacity(t_len);
        let innov_sd = (1.0 - phi_true * phi_true).sqrt();
        let mut f: f64 = StandardNormal.sample(&mut rng);
        for _ in 0..t_len {
            factor.push(f);
            let z: f64 = StandardNormal.sample(&mut rng);
            f = phi_true * f + innov_sd * z;
        }

        let start = Period::new(2000, 1);
        let mut series = Vec::new();
        for (i, &lambda) in loadings_true.iter().enumerate() {
            let lambda: f64 = lambda;
            let idio_sd = (1.0 - lambda * lambda).sqrt();
            let obs: Vec<(Period, f64)> = (0..t_len)
                .map(|t| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (start.add_months(t as i64), lambda * factor[t] + idio_sd * z)
                })
                .collect();
            series.push(Series::new(format!("s{i}"), Frequency::Monthly, obs).unwrap());
        }
        // Quarterly target: needed by the dataset contract; include it as a
        // sixth loading-0.8 column observed at quarter ends.
        let target_obs: Vec<(Period, f64)> = (0..t_len)
            .map(|t| (start.add_months(t as i64), t))
            .filter(|(p, _)| p.is_quarter_end())
            .map(|(p, t)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (p, 0.8 * factor[t] + 0.6 * z)
            })
            .collect();
        series.push(Series::new("gdp", Frequency::Quarterly, target_obs).unwrap());

        let ds = MixedFrequencyDataset::align(
            &series,
            (start, start.add_months(t_len as i64 - 1)),
            "gdp",
            false,
        )
        .unwrap();

        let fit = em_fit(&ds, None, 200, 1e-8).unwrap();
        // Non-decreasing likelihood history.
        for pair in fit.history.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-8, "history {:?}", fit.history);
        }
        // Scale-normalize: compare loadings by the implied stationary factor sd.
        let factor_sd = (fit.model.factor_var() / (1.0 - fit.model.phi().powi(2))).sqrt();
        for (i, &lambda_true) in loadings_true.iter().enumerate() {
            let recovered = fit.model.loadings()[i] * factor_sd;
            assert!(
                (recovered - lambda_true).abs() < 0.15,
                "loading {i}: {recovered} vs {lambda_true}"
            );
        }
        assert!(
            (fit.model.phi() - phi_true).abs() < 0.1,
            "phi {} vs {phi_true}",
            fit.model.phi()
        );
    }

    #[test]
    fn em_from_truth_converges_immediately() {
        // Small simulated panel; starting EM at a converged fit must stop
        // within a few iterations.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let start = Period::new(2000, 1);
        let t_len = 120usize;
        let mut factor = Vec::with_capacity(t_len);
        let mut f = 0.0;
        for _ in 0..t_len {
            let z: f64 = StandardNormal.sample(&mut rng);
            f = 0.6 * f + 0.64_f64.sqrt() * z;
            factor.push(f);
        }
        let mut series = Vec::new();
        for (i, lambda) in [0.9, 0.6].iter().enumerate() {
            let obs: Vec<(Period, f64)> = (0..t_len)
                .map(|t| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (start.add_months(t as i64), lambda * factor[t] + 0.5 * z)
                })
                .collect();
            series.push(Series::new(format!("s{i}"), Frequency::Monthly, obs).unwrap());
        }
        let target_obs: Vec<(Period, f64)> = (0..t_len)
            .map(|t| (start.add_months(t as i64), t))
            .filter(|(p, _)| p.is_quarter_end())
            .map(|(p, t)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (p, 0.7 * factor[t] + 0.5 * z)
            })
            .collect();
        series.push(Series::new("gdp", Frequency::Quarterly, target_obs).unwrap());
        let ds = MixedFrequencyDataset::align(
            &series,
            (start, start.add_months(t_len as i64 - 1)),
            "gdp",
            false,
        )
        .unwrap();

        let converged = em_fit(&ds, None, 1000, 1e-8).unwrap();
        let refit = em_fit(&ds, Some(converged.model.clone()), 50, 1e-8).unwrap();
        assert!(
            refit.iterations <= 3,
            "restart took {} iterations",
            refit.iterations
        );
    }

    #[test]
    fn sign_convention_normalizes_leading_loading() {
        let model = StateSpaceModel::new(
            vec!["a".into(), "b".into()],
            vec![-0.5, 0.4],
            0.3,
            0.5,
            vec![0.1, 0.1],
            Standardization::identity(2),
        )
        .unwrap();
        assert!(model.loadings()[0] > 0.0);
        assert!(model.loadings()[1] < 0.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let model = StateSpaceModel::new(
            vec!["a".into(), "gdp".into()],
            vec![0.123456789012345678, -0.4],
            0.345678901234567,
            0.25,
            vec![0.1, 0.2],
            Standardization {
                mean: vec![0.01, 0.02],
                sd: vec![1.5, 0.7],
            },
        )
        .unwrap();
        let json = model.to_json().unwrap();
        let back = StateSpaceModel::from_json(&json).unwrap();
        assert_eq!(model, back);
    }
}
