//! Dated snapshots of the dataset and their on-disk CSV format.
//!
//! A vintage directory holds one file per snapshot, named `YYYY-MM-DD.csv`
//! (the as-of date), with header `date,series_id,value` where `date` is a
//! `YYYY-MM` monthly period and `value` a decimal growth fraction. Missing
//! observations are absent rows.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;

use crate::dataset::MixedFrequencyDataset;
use crate::error::{Error, Result};
use crate::period::Period;
use crate::series::{Frequency, Series};

/// Ordered collection of dataset snapshots, keyed by as-of date.
#[derive(Debug, Clone, Default)]
pub struct VintageStore {
    snapshots: BTreeMap<NaiveDate, MixedFrequencyDataset>,
}

impl VintageStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a snapshot. All snapshots must share the same column set and
    /// target column; duplicate as-of dates are rejected.
    pub fn insert(&mut self, asof: NaiveDate, ds: MixedFrequencyDataset) -> Result<()> {
        if let Some((_, existing)) = self.snapshots.iter().next() {
            if existing.columns() != ds.columns() {
                return Err(Error::ColumnMismatch(format!(
                    "snapshot {asof} has a different column set"
                )));
            }
            if existing.target_column() != ds.target_column() {
                return Err(Error::ColumnMismatch(format!(
                    "snapshot {asof} has a different target column"
                )));
            }
        }
        if self.snapshots.contains_key(&asof) {
            return Err(Error::Validation(format!("duplicate vintage date {asof}")));
        }
        self.snapshots.insert(asof, ds);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.snapshots.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, &MixedFrequencyDataset)> {
        self.snapshots.iter().map(|(d, ds)| (*d, ds))
    }

    pub fn get(&self, asof: NaiveDate) -> Option<&MixedFrequencyDataset> {
        self.snapshots.get(&asof)
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.snapshots.keys().next().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.snapshots.keys().next_back().copied()
    }

    /// Latest snapshot in the store.
    pub fn latest(&self) -> Option<(NaiveDate, &MixedFrequencyDataset)> {
        self.snapshots.iter().next_back().map(|(d, ds)| (*d, ds))
    }

    /// The snapshot with the greatest as-of date `<= date` — the information
    /// available at that point in time.
    pub fn vintage_at(&self, date: NaiveDate) -> Result<(NaiveDate, &MixedFrequencyDataset)> {
        if self.snapshots.is_empty() {
            return Err(Error::EmptyVintageStore);
        }
        self.snapshots
            .range(..=date)
            .next_back()
            .map(|(d, ds)| (*d, ds))
            .ok_or(Error::DateBeforeFirstVintage(date))
    }

    /// Cells observed in an earlier snapshot but missing in a later one,
    /// reported as (earlier date, later date, column, period). Empty for a
    /// well-formed store whose observation sets only grow.
    pub fn monotonicity_violations(&self) -> Vec<(NaiveDate, NaiveDate, String, Period)> {
        let mut out = Vec::new();
        let snaps: Vec<(&NaiveDate, &MixedFrequencyDataset)> = self.snapshots.iter().collect();
        for pair in snaps.windows(2) {
            let (d0, ds0) = pair[0];
            let (d1, ds1) = pair[1];
            for (col, column) in ds0.columns().iter().enumerate() {
                for (period, _) in ds0.observed_cells(col) {
                    if ds1.value_at(period, &column.id).is_none() {
                        out.push((*d0, *d1, column.id.clone(), period));
                    }
                }
            }
        }
        out
    }

    /// Write one `YYYY-MM-DD.csv` per snapshot into `dir`.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        for (asof, ds) in &self.snapshots {
            let path = dir.join(format!("{asof}.csv"));
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e),
            })?;
            w.write_record(["date", "series_id", "value"])
                .map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    source: std::io::Error::other(e),
                })?;
            for row in 0..ds.n_rows() {
                let period = ds.period_of_row(row);
                for (col, column) in ds.columns().iter().enumerate() {
                    if let Some(v) = ds.value(row, col) {
                        w.write_record([period.to_string(), column.id.clone(), v.to_string()])
                            .map_err(|e| Error::Io {
                                path: path.display().to_string(),
                                source: std::io::Error::other(e),
                            })?;
                    }
                }
            }
            w.flush().map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
        }
        Ok(())
    }

    /// Load every `YYYY-MM-DD.csv` in `dir`.
    ///
    /// The column census is the union of series ids across all files, so a
    /// series that has not started publishing yet appears as an all-missing
    /// column in early snapshots. A series is tagged quarterly when every
    /// observation of it across the whole directory falls in a quarter-end
    /// month; otherwise monthly.
    pub fn load_dir(dir: &Path, target_column: &str) -> Result<Self> {
        let mut entries: Vec<(NaiveDate, std::path::PathBuf)> = Vec::new();
        let read_dir = std::fs::read_dir(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        for entry in read_dir {
            let entry = entry.map_err(|e| Error::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
            let path = entry.path();
            if path.extension().and_then(|s| s.to_str()) != Some("csv") {
                continue;
            }
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            let asof = NaiveDate::parse_from_str(stem, "%Y-%m-%d").map_err(|_| {
                Error::Validation(format!(
                    "vintage file name {stem:?} is not a YYYY-MM-DD date"
                ))
            })?;
            entries.push((asof, path));
        }
        if entries.is_empty() {
            return Err(Error::Validation(format!(
                "no vintage CSV files in {}",
                dir.display()
            )));
        }
        entries.sort();

        // First pass: parse rows, collect the union census and period span.
        let mut parsed: Vec<(NaiveDate, BTreeMap<String, BTreeMap<Period, f64>>)> = Vec::new();
        let mut census: BTreeSet<String> = BTreeSet::new();
        let mut all_periods: BTreeMap<String, BTreeSet<Period>> = BTreeMap::new();
        let mut global_start: Option<Period> = None;
        for (asof, path) in &entries {
            let rows = read_snapshot_csv(path)?;
            for (id, obs) in &rows {
                census.insert(id.clone());
                let set = all_periods.entry(id.clone()).or_default();
                for period in obs.keys() {
                    set.insert(*period);
                    global_start = Some(match global_start {
                        Some(s) if s <= *period => s,
                        _ => *period,
                    });
                }
            }
            parsed.push((*asof, rows));
        }
        if !census.contains(target_column) {
            return Err(Error::Validation(format!(
                "target column {target_column} not present in any vintage file"
            )));
        }
        let global_start = global_start.ok_or_else(|| {
            Error::Validation("vintage files contain no observations".to_string())
        })?;

        let frequencies: BTreeMap<String, Frequency> = census
            .iter()
            .map(|id| {
                let periods = all_periods.get(id);
                let quarterly = periods
                    .map(|set| !set.is_empty() && set.iter().all(|p| p.is_quarter_end()))
                    .unwrap_or(false);
                (
                    id.clone(),
                    if quarterly {
                        Frequency::Quarterly
                    } else {
                        Frequency::Monthly
                    },
                )
            })
            .collect();

        let mut store = VintageStore::new();
        for (asof, rows) in parsed {
            let end = rows
                .values()
                .flat_map(|obs| obs.keys().copied())
                .max()
                .unwrap_or(global_start);
            let mut series_list = Vec::new();
            for id in &census {
                let obs = rows.get(id).cloned().unwrap_or_default();
                series_list.push(Series::new(id.clone(), frequencies[id], obs)?);
            }
            let ds = MixedFrequencyDataset::align(
                &series_list,
                (global_start, end),
                target_column,
                false,
            )?;
            store.insert(asof, ds)?;
        }
        Ok(store)
    }
}

/// Parse one snapshot file into per-series observation maps.
pub fn read_snapshot_csv(path: &Path) -> Result<BTreeMap<String, BTreeMap<Period, f64>>> {
    let file_label = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io {
            path: file_label.clone(),
            source: std::io::Error::other(e),
        })?;
    {
        let headers = reader.headers().map_err(|e| Error::CsvParse {
            file: file_label.clone(),
            line: 1,
            message: e.to_string(),
        })?;
        let expected = ["date", "series_id", "value"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::CsvParse {
                file: file_label,
                line: 1,
                message: format!("expected header date,series_id,value, got {headers:?}"),
            });
        }
    }
    let mut out: BTreeMap<String, BTreeMap<Period, f64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::CsvParse {
            file: file_label.clone(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(Error::CsvParse {
                file: file_label.clone(),
                line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let period: Period = record[0].parse().map_err(|e| Error::CsvParse {
            file: file_label.clone(),
            line,
            message: e,
        })?;
        let id = record[1].to_string();
        if id.is_empty() {
            return Err(Error::CsvParse {
                file: file_label.clone(),
                line,
                message: "empty series_id".to_string(),
            });
        }
        let value: f64 = record[2].parse().map_err(|_| Error::CsvParse {
            file: file_label.clone(),
            line,
            message: format!("value {:?} is not a number", &record[2]),
        })?;
        if !value.is_finite() {
            return Err(Error::CsvParse {
                file: file_label.clone(),
                line,
                message: format!("value {value} is not finite"),
            });
        }
        if out.entry(id.clone()).or_default().insert(period, value).is_some() {
            return Err(Error::CsvParse {
                file: file_label.clone(),
                line,
                message: format!("duplicate observation for {id} at {period}"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dataset(extra: f64) -> MixedFrequencyDataset {
        let m = Series::new(
            "m",
            Frequency::Monthly,
            [
                (Period::new(2020, 1), 0.01),
                (Period::new(2020, 2), 0.02 + extra),
            ],
        )
        .unwrap();
        let q = Series::new(
            "gdp",
            Frequency::Quarterly,
            [(Period::new(2020, 3), 0.1)],
        )
        .unwrap();
        MixedFrequencyDataset::align(
            &[m, q],
            (Period::new(2020, 1), Period::new(2020, 3)),
            "gdp",
            false,
        )
        .unwrap()
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn vintage_at_picks_latest_not_after() {
        let mut store = VintageStore::new();
        store.insert(date(2020, 3, 15), small_dataset(0.0)).unwrap();
        store.insert(date(2020, 4, 15), small_dataset(0.5)).unwrap();

        // Exact hit.
        let (d, _) = store.vintage_at(date(2020, 3, 15)).unwrap();
        assert_eq!(d, date(2020, 3, 15));
        // Between snapshots: the earlier one.
        let (d, _) = store.vintage_at(date(2020, 4, 1)).unwrap();
        assert_eq!(d, date(2020, 3, 15));
        // Before the first: error.
        assert!(matches!(
            store.vintage_at(date(2020, 1, 1)),
            Err(Error::DateBeforeFirstVintage(_))
        ));
    }

    #[test]
    fn empty_store_errors() {
        let store = VintageStore::new();
        assert!(matches!(
            store.vintage_at(date(2020, 1, 1)),
            Err(Error::EmptyVintageStore)
        ));
    }

    #[test]
    fn csv_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let mut store = VintageStore::new();
        store.insert(date(2020, 3, 15), small_dataset(0.0)).unwrap();
        store.insert(date(2020, 4, 15), small_dataset(0.25)).unwrap();
        store.save_dir(tmp.path()).unwrap();

        let loaded = VintageStore::load_dir(tmp.path(), "gdp").unwrap();
        assert_eq!(loaded.len(), 2);
        let (_, ds) = loaded.vintage_at(date(2020, 4, 20)).unwrap();
        assert_eq!(ds.value_at(Period::new(2020, 2), "m"), Some(0.27));
        assert_eq!(ds.value_at(Period::new(2020, 3), "gdp"), Some(0.1));
        // Frequency inference: gdp only observed at quarter ends.
        assert_eq!(
            ds.columns()[ds.column_index("gdp").unwrap()].frequency,
            Frequency::Quarterly
        );
        assert_eq!(
            ds.columns()[ds.column_index("m").unwrap()].frequency,
            Frequency::Monthly
        );
    }

    #[test]
    fn malformed_value_reports_file_and_line() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("2020-03-15.csv");
        std::fs::write(&path, "date,series_id,value\n2020-01,m,0.01\n2020-02,m,abc\n").unwrap();
        let err = VintageStore::load_dir(tmp.path(), "gdp").unwrap_err();
        match err {
            Error::CsvParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn monotonicity_violation_detected() {
        let mut store = VintageStore::new();
        let full = small_dataset(0.0);
        let shrunk = full
            .with_cells_missing(
                "m",
                &[Period::new(2020, 2)].into_iter().collect(),
            )
            .unwrap();
        store.insert(date(2020, 3, 15), full).unwrap();
        store.insert(date(2020, 4, 15), shrunk).unwrap();
        let violations = store.monotonicity_violations();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].2, "m");
        assert_eq!(violations[0].3, Period::new(2020, 2));
    }
}
