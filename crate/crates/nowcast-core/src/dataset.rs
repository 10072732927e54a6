//! Mixed-frequency datasets on a monthly base grid.
//!
//! Monthly observations occupy their own month-row; quarterly observations
//! occupy their quarter-end month-row (months 3, 6, 9, 12). All other cells
//! are missing. The target column is always quarterly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::period::{Period, Quarter};
use crate::series::{Frequency, Series};

/// Column label: series id plus frequency tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub id: String,
    pub frequency: Frequency,
}

/// Aligned matrix of optional values indexed `(monthly period, column)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedFrequencyDataset {
    columns: Vec<Column>,
    start: Period,
    /// Row-major: `grid[row][col]`, row 0 is `start`.
    grid: Vec<Vec<Option<f64>>>,
    target_column: String,
}

impl MixedFrequencyDataset {
    /// Place a list of series on a common monthly grid spanning `range`
    /// (inclusive). Observations outside the range are an error unless
    /// `truncate` is set, in which case they are dropped.
    pub fn align(
        series_list: &[Series],
        range: (Period, Period),
        target_column: &str,
        truncate: bool,
    ) -> Result<Self> {
        let (start, end) = range;
        if end < start {
            return Err(Error::Validation(format!(
                "empty grid range {start}..{end}"
            )));
        }
        let mut seen = BTreeSet::new();
        for s in series_list {
            if !seen.insert(s.id().to_string()) {
                return Err(Error::DuplicateSeriesId(s.id().to_string()));
            }
        }
        let target = series_list
            .iter()
            .find(|s| s.id() == target_column)
            .ok_or_else(|| {
                Error::Validation(format!("target column {target_column} not among series"))
            })?;
        if target.frequency() != Frequency::Quarterly {
            return Err(Error::Validation(format!(
                "target column {target_column} must be quarterly"
            )));
        }

        let n_rows = (end.months_since(&start) + 1) as usize;
        let mut grid = vec![vec![None; series_list.len()]; n_rows];
        for (col, s) in series_list.iter().enumerate() {
            for (&period, &value) in s.observations() {
                if period < start || period > end {
                    if truncate {
                        continue;
                    }
                    return Err(Error::ObservationOutOfRange {
                        id: s.id().to_string(),
                        period,
                    });
                }
                let row = period.months_since(&start) as usize;
                grid[row][col] = Some(value);
            }
        }
        Ok(MixedFrequencyDataset {
            columns: series_list
                .iter()
                .map(|s| Column {
                    id: s.id().to_string(),
                    frequency: s.frequency(),
                })
                .collect(),
            start,
            grid,
            target_column: target_column.to_string(),
        })
    }

    /// Internal constructor for derived datasets (fills, masks) that may
    /// relax the quarter-end placement rule.
    pub(crate) fn from_parts(
        columns: Vec<Column>,
        start: Period,
        grid: Vec<Vec<Option<f64>>>,
        target_column: String,
    ) -> Self {
        MixedFrequencyDataset {
            columns,
            start,
            grid,
            target_column,
        }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_ids(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.id.as_str())
    }

    pub fn n_rows(&self) -> usize {
        self.grid.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn start(&self) -> Period {
        self.start
    }

    pub fn end(&self) -> Period {
        self.start.add_months(self.grid.len() as i64 - 1)
    }

    pub fn target_column(&self) -> &str {
        &self.target_column
    }

    pub fn target_index(&self) -> usize {
        self.column_index(&self.target_column)
            .expect("target column validated at construction")
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.id == id)
    }

    pub fn period_of_row(&self, row: usize) -> Period {
        self.start.add_months(row as i64)
    }

    pub fn row_of_period(&self, period: Period) -> Option<usize> {
        let offset = period.months_since(&self.start);
        if offset < 0 || offset >= self.grid.len() as i64 {
            None
        } else {
            Some(offset as usize)
        }
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.grid[row][col]
    }

    pub fn value_at(&self, period: Period, col_id: &str) -> Option<f64> {
        let row = self.row_of_period(period)?;
        let col = self.column_index(col_id)?;
        self.grid[row][col]
    }

    pub(crate) fn grid(&self) -> &[Vec<Option<f64>>] {
        &self.grid
    }

    /// Rows where this column may carry values: every row for monthly
    /// columns, quarter-end rows for quarterly ones.
    pub fn eligible_rows(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        let freq = self.columns[col].frequency;
        (0..self.grid.len()).filter(move |&row| {
            freq == Frequency::Monthly || self.period_of_row(row).is_quarter_end()
        })
    }

    /// Per-column latest observed period and interior gaps.
    pub fn ragged_edge_profile(&self) -> RaggedEdgeProfile {
        let mut columns = BTreeMap::new();
        for (col, column) in self.columns.iter().enumerate() {
            let mut latest: Option<Period> = None;
            for row in self.eligible_rows(col) {
                if self.grid[row][col].is_some() {
                    latest = Some(self.period_of_row(row));
                }
            }
            let mut interior_gaps = BTreeSet::new();
            if let Some(latest_period) = latest {
                for row in self.eligible_rows(col) {
                    let period = self.period_of_row(row);
                    if period < latest_period && self.grid[row][col].is_none() {
                        interior_gaps.insert(period);
                    }
                }
            }
            columns.insert(
                column.id.clone(),
                ColumnEdge {
                    latest,
                    interior_gaps,
                },
            );
        }
        RaggedEdgeProfile { columns }
    }

    /// Copy with missing rows appended so the grid reaches `period`.
    /// Returns an unchanged copy when the grid already covers it.
    pub fn extend_to(&self, period: Period) -> Self {
        let mut out = self.clone();
        let extra = period.months_since(&self.end());
        for _ in 0..extra.max(0) {
            out.grid.push(vec![None; self.columns.len()]);
        }
        out
    }

    /// Copy with the given cells of one column made missing.
    pub fn with_cells_missing(
        &self,
        col_id: &str,
        periods: &BTreeSet<Period>,
    ) -> Result<Self> {
        let col = self
            .column_index(col_id)
            .ok_or_else(|| Error::ColumnMismatch(format!("unknown column {col_id}")))?;
        let mut out = self.clone();
        for &period in periods {
            if let Some(row) = out.row_of_period(period) {
                out.grid[row][col] = None;
            }
        }
        Ok(out)
    }

    /// Copy with one cell overwritten. The cell must be a legal position
    /// for the column's frequency.
    pub fn with_value_at(&self, col_id: &str, period: Period, value: f64) -> Result<Self> {
        let col = self
            .column_index(col_id)
            .ok_or_else(|| Error::ColumnMismatch(format!("unknown column {col_id}")))?;
        if !value.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite value for {col_id} at {period}"
            )));
        }
        if self.columns[col].frequency == Frequency::Quarterly && !period.is_quarter_end() {
            return Err(Error::Validation(format!(
                "quarterly column {col_id} cannot carry a value at {period}"
            )));
        }
        let row = self.row_of_period(period).ok_or(Error::ObservationOutOfRange {
            id: col_id.to_string(),
            period,
        })?;
        let mut out = self.clone();
        out.grid[row][col] = Some(value);
        Ok(out)
    }

    /// Copy keeping only the cells for which `keep` returns true.
    pub fn masked(&self, keep: impl Fn(&str, Period) -> bool) -> Self {
        let mut out = self.clone();
        for row in 0..out.grid.len() {
            let period = out.period_of_row(row);
            for col in 0..out.columns.len() {
                if out.grid[row][col].is_some() && !keep(&out.columns[col].id, period) {
                    out.grid[row][col] = None;
                }
            }
        }
        out
    }

    /// Copy masked by a ragged-edge profile: per column, cells at interior
    /// gaps and cells after the latest observed period are made missing.
    pub fn masked_by_profile(&self, profile: &RaggedEdgeProfile) -> Self {
        self.masked(|id, period| match profile.columns.get(id) {
            Some(edge) => match edge.latest {
                Some(latest) => period <= latest && !edge.interior_gaps.contains(&period),
                None => false,
            },
            None => true,
        })
    }

    /// Training slice: rows truncated at `last`'s quarter-end month, and
    /// target observations outside `first..=last` removed. History before
    /// `first` stays available as input context.
    pub fn training_slice(&self, first: Quarter, last: Quarter) -> Result<Self> {
        let end_period = last.end_month();
        let end_row = self.row_of_period(end_period).ok_or_else(|| {
            Error::Validation(format!(
                "training window end {end_period} outside grid {}..{}",
                self.start(),
                self.end()
            ))
        })?;
        let target = self.target_index();
        let mut out = self.clone();
        out.grid.truncate(end_row + 1);
        for row in 0..out.grid.len() {
            let period = out.period_of_row(row);
            if out.grid[row][target].is_some() {
                let q = period.quarter();
                if q < first || q > last {
                    out.grid[row][target] = None;
                }
            }
        }
        Ok(out)
    }

    /// True when every non-target cell is populated.
    pub fn is_dense_ex_target(&self) -> bool {
        let target = self.target_index();
        self.grid.iter().all(|row| {
            row.iter()
                .enumerate()
                .all(|(col, v)| col == target || v.is_some())
        })
    }

    /// Observed (period, value) pairs of one column.
    pub fn observed_cells(&self, col: usize) -> Vec<(Period, f64)> {
        self.grid
            .iter()
            .enumerate()
            .filter_map(|(row, cells)| cells[col].map(|v| (self.period_of_row(row), v)))
            .collect()
    }
}

/// Latest observed period and interior missing periods, per column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnEdge {
    /// Latest eligible period holding a value, or `None` for an all-missing column.
    pub latest: Option<Period>,
    /// Eligible periods before `latest` with no value.
    pub interior_gaps: BTreeSet<Period>,
}

/// Ragged-edge description of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaggedEdgeProfile {
    pub columns: BTreeMap<String, ColumnEdge>,
}

impl RaggedEdgeProfile {
    pub fn column(&self, id: &str) -> Option<&ColumnEdge> {
        self.columns.get(id)
    }

    /// Trailing-gap length in eligible periods for one column of `ds`.
    pub fn trailing_gap(&self, ds: &MixedFrequencyDataset, id: &str) -> Option<usize> {
        let col = ds.column_index(id)?;
        let edge = self.columns.get(id)?;
        let count = ds
            .eligible_rows(col)
            .map(|row| ds.period_of_row(row))
            .filter(|period| match edge.latest {
                Some(latest) => *period > latest,
                None => true,
            })
            .count();
        Some(count)
    }
}
