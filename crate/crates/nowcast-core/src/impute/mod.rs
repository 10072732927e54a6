//! Filling missing cells: per-series mean, or ARMA extrapolation of
//! trailing gaps.
//!
//! Both methods leave the target column untouched and never alter an
//! observed cell. The filled dataset is dense in every non-target column,
//! including the between-quarter months of quarterly columns, so a model
//! can consume the grid as a plain matrix.

mod arma;

pub use arma::{fit_arma, forecast, ArmaFit, ArmaOrder, MIN_FIT_OBS};

use serde::{Deserialize, Serialize};

use crate::dataset::MixedFrequencyDataset;
use crate::error::{Error, Result};

/// How missing cells are filled before prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum FillMethod {
    Mean,
    Arma { p: usize, q: usize },
}

impl FillMethod {
    pub fn arma_order(&self) -> Option<ArmaOrder> {
        match self {
            FillMethod::Mean => None,
            FillMethod::Arma { p, q } => Some(ArmaOrder::new(*p, *q).expect("validated order")),
        }
    }
}

impl Default for FillMethod {
    fn default() -> Self {
        FillMethod::Mean
    }
}

impl std::fmt::Display for FillMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FillMethod::Mean => write!(f, "mean"),
            FillMethod::Arma { p, q } => write!(f, "arma({p},{q})"),
        }
    }
}

/// Dispatch on the configured method.
pub fn fill(ds: &MixedFrequencyDataset, method: FillMethod) -> Result<MixedFrequencyDataset> {
    match method {
        FillMethod::Mean => fill_mean(ds),
        FillMethod::Arma { p, q } => fill_arma(ds, ArmaOrder::new(p, q)?),
    }
}

fn column_mean(ds: &MixedFrequencyDataset, col: usize) -> Result<f64> {
    let observed = ds.observed_cells(col);
    if observed.is_empty() {
        return Err(Error::AllMissingColumn(ds.columns()[col].id.clone()));
    }
    Ok(observed.iter().map(|(_, v)| v).sum::<f64>() / observed.len() as f64)
}

/// Replace every missing cell of every non-target column with the
/// arithmetic mean of that column's observed values in this snapshot.
pub fn fill_mean(ds: &MixedFrequencyDataset) -> Result<MixedFrequencyDataset> {
    let target = ds.target_index();
    let mut grid: Vec<Vec<Option<f64>>> = ds.grid().to_vec();
    for col in 0..ds.n_cols() {
        if col == target {
            continue;
        }
        let mean = column_mean(ds, col)?;
        for row in grid.iter_mut() {
            if row[col].is_none() {
                row[col] = Some(mean);
            }
        }
    }
    Ok(MixedFrequencyDataset::from_parts(
        ds.columns().to_vec(),
        ds.start(),
        grid,
        ds.target_column().to_string(),
    ))
}

/// Fill non-target columns with ARMA extrapolation of trailing gaps.
///
/// Per column, at the column's own frequency: interior gaps (and leading
/// gaps) are mean-filled so the fitter sees a contiguous sequence, then the
/// trailing missing cells receive iterated h-step-ahead forecasts. For
/// quarterly columns the between-quarter month cells take the column mean.
pub fn fill_arma(
    ds: &MixedFrequencyDataset,
    order: ArmaOrder,
) -> Result<MixedFrequencyDataset> {
    let target = ds.target_index();
    let mut grid: Vec<Vec<Option<f64>>> = ds.grid().to_vec();
    for col in 0..ds.n_cols() {
        if col == target {
            continue;
        }
        let id = ds.columns()[col].id.clone();
        let mean = column_mean(ds, col)?;
        let eligible: Vec<usize> = ds.eligible_rows(col).collect();
        let last_observed = eligible
            .iter()
            .rposition(|&row| grid[row][col].is_some());

        // Contiguous in-sample sequence at the column's own frequency,
        // interior/leading gaps mean-filled.
        let (history, trailing_rows): (Vec<f64>, Vec<usize>) = match last_observed {
            Some(pos) => (
                eligible[..=pos]
                    .iter()
                    .map(|&row| grid[row][col].unwrap_or(mean))
                    .collect(),
                eligible[pos + 1..].to_vec(),
            ),
            None => (Vec::new(), eligible.clone()),
        };

        if !trailing_rows.is_empty() {
            let fit = fit_arma(&history, order)
                .map_err(|e| Error::for_column(&id, e))
                .map(|mut f| {
                    f.series_id = Some(id.clone());
                    f
                })?;
            let forecasts = forecast(&fit, &history, trailing_rows.len());
            for (&row, &value) in trailing_rows.iter().zip(forecasts.iter()) {
                grid[row][col] = Some(value);
            }
        }

        // Everything still missing (interior gaps, leading gaps, and the
        // between-quarter months of quarterly columns) takes the mean.
        for row in grid.iter_mut() {
            if row[col].is_none() {
                row[col] = Some(mean);
            }
        }
    }
    Ok(MixedFrequencyDataset::from_parts(
        ds.columns().to_vec(),
        ds.start(),
        grid,
        ds.target_column().to_string(),
    ))
}
