//! Seeded synthetic mixed-frequency datasets and vintage stores from a
//! known single-factor process, with publication lags, a crisis-style
//! shock window, and an optional data-revision mode. Everything the
//! end-to-end checks need without any proprietary data.

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::MixedFrequencyDataset;
use crate::error::{Error, Result};
use crate::period::Period;
use crate::series::{Frequency, Series};
use crate::vintage::VintageStore;

/// One simulated series: factor loading, noise level, and how many months
/// after a period closes until its value is published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub id: String,
    pub frequency: Frequency,
    pub loading: f64,
    pub idio_sd: f64,
    pub publication_lag_months: u32,
}

/// Additive shift of the factor innovation mean over a window of months.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrisisWindow {
    pub start: Period,
    pub length_months: usize,
    pub shock: f64,
}

/// Vintage collection schedule: monthly snapshots from `first` until
/// `switch_to_weekly`, then one every 7 days through `last`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cadence {
    pub first: NaiveDate,
    pub switch_to_weekly: NaiveDate,
    pub last: NaiveDate,
}

impl Cadence {
    /// The ordered as-of dates implied by the schedule.
    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut out = Vec::new();
        let mut d = self.first;
        let mut months = 0;
        while d < self.switch_to_weekly {
            out.push(d);
            months += 1;
            d = self
                .first
                .checked_add_months(chrono::Months::new(months))
                .expect("date arithmetic in range");
        }
        let mut d = self.switch_to_weekly;
        while d <= self.last {
            out.push(d);
            d += chrono::Duration::days(7);
        }
        out.dedup();
        out
    }
}

/// Full description of the data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub series: Vec<SeriesSpec>,
    pub target_id: String,
    pub start: Period,
    pub t_months: usize,
    pub phi: f64,
    pub factor_innovation_sd: f64,
    pub crisis: Option<CrisisWindow>,
    pub cadence: Cadence,
    pub revisions: bool,
    /// Scale of the preliminary-release noise when `revisions` is on.
    pub revision_sd: f64,
    pub seed: u64,
}

impl DgpConfig {
    /// Deterministic defaults: monthly series m01.. and quarterly series
    /// q01.. with cycling loadings, noise levels, and publication lags;
    /// the first quarterly series is the target. Vintage collection covers
    /// roughly the last 14 months of the sample, switching to weekly about
    /// five months in.
    pub fn standard(n_monthly: usize, n_quarterly: usize, t_months: usize, seed: u64) -> Self {
        let loadings = [0.9, 0.7, -0.5, 0.8, 0.6, -0.4];
        let noises = [0.3, 0.45, 0.6];
        let lags = [1u32, 2, 3];
        let mut series = Vec::new();
        for i in 0..n_monthly {
            series.push(SeriesSpec {
                id: format!("m{:02}", i + 1),
                frequency: Frequency::Monthly,
                loading: loadings[i % loadings.len()],
                idio_sd: noises[i % noises.len()],
                publication_lag_months: lags[i % lags.len()],
            });
        }
        for i in 0..n_quarterly {
            series.push(SeriesSpec {
                id: format!("q{:02}", i + 1),
                frequency: Frequency::Quarterly,
                loading: loadings[(i + 2) % loadings.len()].abs(),
                idio_sd: noises[(i + 1) % noises.len()],
                publication_lag_months: 2 + (i as u32 % 2),
            });
        }
        let start = Period::new(2010, 1);
        let collection_start = start.add_months(t_months as i64 - 14);
        let switch = collection_start.add_months(5);
        let end = start.add_months(t_months as i64 + 3);
        DgpConfig {
            series,
            target_id: "q01".to_string(),
            start,
            t_months,
            phi: 0.8,
            factor_innovation_sd: 0.6,
            crisis: None,
            cadence: Cadence {
                first: collection_start.first_day(),
                switch_to_weekly: switch.first_day(),
                last: end.first_day(),
            },
            revisions: false,
            revision_sd: 0.05,
            seed,
        }
    }

    pub fn end(&self) -> Period {
        self.start.add_months(self.t_months as i64 - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_months < 12 {
            return Err(Error::Validation("t_months must be at least 12".to_string()));
        }
        if !(self.phi.abs() < 1.0) {
            return Err(Error::Validation("phi must satisfy |phi| < 1".to_string()));
        }
        if !(self.factor_innovation_sd > 0.0) {
            return Err(Error::Validation(
                "factor innovation sd must be positive".to_string(),
            ));
        }
        let mut ids = std::collections::BTreeSet::new();
        for s in &self.series {
            if !ids.insert(s.id.clone()) {
                return Err(Error::DuplicateSeriesId(s.id.clone()));
            }
            if !(s.idio_sd >= 0.0) {
                return Err(Error::Validation(format!(
                    "series {}: idiosyncratic sd must be non-negative",
                    s.id
                )));
            }
        }
        let target = self
            .series
            .iter()
            .find(|s| s.id == self.target_id)
            .ok_or_else(|| {
                Error::Validation(format!("target {} not among series", self.target_id))
            })?;
        if target.frequency != Frequency::Quarterly {
            return Err(Error::Validation("target series must be quarterly".to_string()));
        }
        if let Some(crisis) = &self.crisis {
            let crisis_end = crisis.start.add_months(crisis.length_months as i64 - 1);
            if crisis.start < self.start || crisis_end > self.end() {
                return Err(Error::Validation(
                    "crisis window must lie inside the sample".to_string(),
                ));
            }
        }
        let c = &self.cadence;
        if !(c.first <= c.switch_to_weekly && c.switch_to_weekly <= c.last) {
            return Err(Error::Validation(
                "cadence dates must satisfy first <= switch <= last".to_string(),
            ));
        }
        if c.first < self.start.first_day() {
            return Err(Error::Validation(
                "vintage collection cannot start before the sample".to_string(),
            ));
        }
        if self.revisions && !(self.revision_sd > 0.0) {
            return Err(Error::Validation(
                "revision_sd must be positive when revisions are on".to_string(),
            ));
        }
        Ok(())
    }
}

fn month_of(date: NaiveDate) -> Period {
    Period::new(date.year(), date.month())
}

/// A cell for `period` is available at `asof` once `publication_lag_months`
/// whole months have passed: month(asof) >= period + lag.
fn available(period: Period, lag: u32, asof: NaiveDate) -> bool {
    month_of(asof) >= period.add_months(lag as i64)
}

/// Simulate the truth dataset and its vintage store.
///
/// The factor is an AR(1) started from its stationary distribution; a
/// crisis window shifts the innovation mean. Each snapshot contains exactly
/// the observations whose period plus publication lag has elapsed by the
/// as-of date. In revision mode a cell is perturbed by seeded noise in the
/// snapshot where it first appears (except the opening snapshot) and shows
/// its final value afterwards.
pub fn simulate(config: &DgpConfig) -> Result<(MixedFrequencyDataset, VintageStore)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let t_len = config.t_months;

    let crisis_shift = |t: usize| -> f64 {
        match &config.crisis {
            Some(c) => {
                let offset = config.start.add_months(t as i64).months_since(&c.start);
                if offset >= 0 && (offset as usize) < c.length_months {
                    c.shock
                } else {
                    0.0
                }
            }
            None => 0.0,
        }
    };

    let stationary_sd =
        config.factor_innovation_sd / (1.0 - config.phi * config.phi).sqrt();
    let mut factor = Vec::with_capacity(t_len);
    let z0: f64 = StandardNormal.sample(&mut rng);
    factor.push(z0 * stationary_sd + crisis_shift(0));
    for t in 1..t_len {
        let z: f64 = StandardNormal.sample(&mut rng);
        factor.push(
            config.phi * factor[t - 1] + config.factor_innovation_sd * z + crisis_shift(t),
        );
    }

    let eligible = |spec: &SeriesSpec, t: usize| -> bool {
        spec.frequency == Frequency::Monthly
            || config.start.add_months(t as i64).is_quarter_end()
    };

    let mut series_list = Vec::with_capacity(config.series.len());
    for spec in &config.series {
        let mut obs = Vec::new();
        for t in 0..t_len {
            if !eligible(spec, t) {
                continue;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            obs.push((
                config.start.add_months(t as i64),
                spec.loading * factor[t] + spec.idio_sd * z,
            ));
        }
        series_list.push(Series::new(spec.id.clone(), spec.frequency, obs)?);
    }

    // Preliminary-release noise, drawn up front so a cell's perturbation is
    // the same whichever snapshot first contains it.
    let mut revision_noise: Vec<Vec<(Period, f64)>> = Vec::with_capacity(config.series.len());
    for spec in &config.series {
        let mut cells = Vec::new();
        for t in 0..t_len {
            if eligible(spec, t) {
                let z: f64 = StandardNormal.sample(&mut rng);
                cells.push((config.start.add_months(t as i64), z * config.revision_sd));
            }
        }
        revision_noise.push(cells);
    }

    let truth = MixedFrequencyDataset::align(
        &series_list,
        (config.start, config.end()),
        &config.target_id,
        false,
    )?;

    let lag_of = |id: &str| -> u32 {
        config
            .series
            .iter()
            .find(|s| s.id == id)
            .map(|s| s.publication_lag_months)
            .expect("column ids come from the config")
    };

    let mut store = VintageStore::new();
    let dates = config.cadence.dates();
    for (k, &asof) in dates.iter().enumerate() {
        let mut snapshot = truth.masked(|id, period| available(period, lag_of(id), asof));
        if config.revisions && k > 0 {
            let prev = dates[k - 1];
            for (spec, noise_cells) in config.series.iter().zip(revision_noise.iter()) {
                for &(period, noise) in noise_cells {
                    let newly = available(period, spec.publication_lag_months, asof)
                        && !available(period, spec.publication_lag_months, prev);
                    if newly {
                        let v = truth
                            .value_at(period, &spec.id)
                            .expect("noise cells are eligible truth cells");
                        snapshot = snapshot.with_value_at(&spec.id, period, v + noise)?;
                    }
                }
            }
        }
        store.insert(asof, snapshot)?;
    }

    Ok((truth, store))
}
