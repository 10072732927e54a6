//! Decompose the change in a nowcast between two vintages into
//! per-variable contributions of new data releases plus an aggregate
//! data-revision contribution, rescaled to the prediction delta.
//!
//! Withholding is one variable at a time: each variable's newly released
//! cells are reverted to missing (what the predictor saw in the
//! earlier vintage) and the prediction change is recorded as that
//! variable's contribution. Revisions of previously released values are
//! attributed through a single aggregate term computed on the newer data
//! restricted to the older vintage's missing-value pattern.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::MixedFrequencyDataset;
use crate::error::{Error, Result};
use crate::impute::FillMethod;
use crate::lstm::prediction_window;
use crate::nowcaster::Nowcaster;
use crate::period::{Period, Quarter};

/// Threshold below which the contribution sum is considered zero and no
/// rescaling is attempted.
const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Cells that differ between two vintages, per column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewDataCells {
    /// Observed in the newer vintage but missing in the older one.
    pub new_cells: BTreeMap<String, BTreeSet<Period>>,
    /// Observed in both with different values (exact inequality; vintages
    /// are authoritative records).
    pub revised_cells: BTreeMap<String, BTreeSet<Period>>,
}

impl NewDataCells {
    pub fn is_empty(&self) -> bool {
        self.new_cells.values().all(|s| s.is_empty())
            && self.revised_cells.values().all(|s| s.is_empty())
    }
}

/// Exact set difference of observed-cell masks plus the value-inequality
/// set. The newer grid may extend the older one; any observed cell outside
/// the old grid counts as new data.
pub fn new_data_cells(
    old: &MixedFrequencyDataset,
    new: &MixedFrequencyDataset,
) -> Result<NewDataCells> {
    if old.columns() != new.columns() {
        return Err(Error::ColumnMismatch(
            "vintages have different column sets".to_string(),
        ));
    }
    let mut out = NewDataCells {
        new_cells: BTreeMap::new(),
        revised_cells: BTreeMap::new(),
    };
    for (col, column) in new.columns().iter().enumerate() {
        let mut news = BTreeSet::new();
        let mut revisions = BTreeSet::new();
        for row in 0..new.n_rows() {
            let period = new.period_of_row(row);
            let Some(v_new) = new.value(row, col) else {
                continue;
            };
            match old.value_at(period, &column.id) {
                None => {
                    news.insert(period);
                }
                Some(v_old) if v_old != v_new => {
                    revisions.insert(period);
                }
                Some(_) => {}
            }
        }
        out.new_cells.insert(column.id.clone(), news);
        out.revised_cells.insert(column.id.clone(), revisions);
    }
    Ok(out)
}

/// Per-variable news contributions for one vintage pair.
///
/// Invariant: the rescaled contributions plus the rescaled revision term
/// sum to `prediction_new - prediction_old` (within float accumulation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsDecomposition {
    pub date_old: NaiveDate,
    pub date_new: NaiveDate,
    pub target_period: Quarter,
    pub prediction_old: f64,
    pub prediction_new: f64,
    /// Raw one-at-a-time withholding contributions, keyed by column id;
    /// columns with no new data carry an exact 0.
    pub raw_contributions: BTreeMap<String, f64>,
    pub revision_contribution: f64,
    pub rescale_factor: f64,
    pub rescaled_contributions: BTreeMap<String, f64>,
    pub rescaled_revision_contribution: f64,
}

impl NewsDecomposition {
    pub fn delta(&self) -> f64 {
        self.prediction_new - self.prediction_old
    }
}

/// Attribute the prediction change from `old` to `new` for `target`.
///
/// For each variable with new cells, a counterfactual vintage reverts
/// those cells to missing and the prediction shortfall is that variable's
/// raw contribution. The revision term is the prediction on the new data
/// restricted to the old missing-value pattern, minus the old prediction.
/// Raw terms are then rescaled so they sum exactly to the delta; when the
/// raw sum is numerically zero the factor is defined as 1 and all rescaled
/// terms as 0.
pub fn decompose(
    model: &dyn Nowcaster,
    date_old: NaiveDate,
    old: &MixedFrequencyDataset,
    date_new: NaiveDate,
    new: &MixedFrequencyDataset,
    target: Quarter,
) -> Result<NewsDecomposition> {
    let prediction_old = model.predict(old, target)?;
    let prediction_new = model.predict(new, target)?;
    let delta = prediction_new - prediction_old;
    let cells = new_data_cells(old, new)?;

    let mut raw_contributions: BTreeMap<String, f64> = new
        .column_ids()
        .map(|id| (id.to_string(), 0.0))
        .collect();
    for (column, periods) in &cells.new_cells {
        if periods.is_empty() {
            continue;
        }
        let counterfactual = new.with_cells_missing(column, periods)?;
        let pred = model
            .predict(&counterfactual, target)
            .map_err(|e| Error::CounterfactualFailed {
                column: column.clone(),
                source: Box::new(e),
            })?;
        raw_contributions.insert(column.clone(), prediction_new - pred);
    }

    // New data restricted to the old missing-value pattern: revert every
    // column's new cells at once, keeping revised values in place.
    let mut restricted = new.clone();
    for (column, periods) in &cells.new_cells {
        if !periods.is_empty() {
            restricted = restricted.with_cells_missing(column, periods)?;
        }
    }
    let revision_contribution = model.predict(&restricted, target)? - prediction_old;

    let denominator: f64 = raw_contributions.values().sum::<f64>() + revision_contribution;
    let (rescale_factor, rescaled_contributions, rescaled_revision_contribution) =
        if denominator.abs() > DEGENERATE_DENOMINATOR {
            let k = delta / denominator;
            (
                k,
                raw_contributions
                    .iter()
                    .map(|(id, &v)| (id.clone(), v * k))
                    .collect(),
                revision_contribution * k,
            )
        } else {
            (
                1.0,
                raw_contributions
                    .keys()
                    .map(|id| (id.clone(), 0.0))
                    .collect(),
                0.0,
            )
        };

    Ok(NewsDecomposition {
        date_old,
        date_new,
        target_period: target,
        prediction_old,
        prediction_new,
        raw_contributions,
        revision_contribution,
        rescale_factor,
        rescaled_contributions,
        rescaled_revision_contribution,
    })
}

/// Linear predictor over the filled prediction window. Its attribution has
/// no interaction effects, which pins the rescale factor at 1 — the
/// reference case for validating the one-at-a-time withholding scheme.
#[derive(Debug, Clone)]
pub struct LinearSurrogate {
    /// `[n_timesteps][n_features]`, features in column order excluding the
    /// target.
    pub weights: Vec<Vec<f64>>,
    pub intercept: f64,
    pub fill_method: FillMethod,
}

impl Nowcaster for LinearSurrogate {
    fn model_id(&self) -> &str {
        "linear"
    }

    fn predict(&self, vintage: &MixedFrequencyDataset, target: Quarter) -> Result<f64> {
        let window = prediction_window(vintage, target, self.weights.len(), self.fill_method)?;
        let mut acc = self.intercept;
        for (w_row, x_row) in self.weights.iter().zip(window.iter()) {
            if w_row.len() != x_row.len() {
                return Err(Error::DimensionMismatch(format!(
                    "surrogate expects {} features, window has {}",
                    w_row.len(),
                    x_row.len()
                )));
            }
            for (w, x) in w_row.iter().zip(x_row.iter()) {
                acc += w * x;
            }
        }
        Ok(acc)
    }
}
