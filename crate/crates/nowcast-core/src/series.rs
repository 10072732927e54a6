//! Individual time series and the growth-rate transform.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::period::Period;

/// Publication frequency of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Monthly,
    Quarterly,
}

impl Frequency {
    /// Months between consecutive observations at this frequency.
    pub fn step_months(&self) -> i64 {
        match self {
            Frequency::Monthly => 1,
            Frequency::Quarterly => 3,
        }
    }
}

/// A single series: id, frequency, and an ordered period -> value map.
///
/// Values are dimensionless growth fractions (e.g. -0.165 for -16.5%) once
/// transformed; absence of a period expresses missingness. Quarterly series
/// may only carry observations in quarter-end months (3, 6, 9, 12).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    id: String,
    frequency: Frequency,
    observations: BTreeMap<Period, f64>,
}

impl Series {
    pub fn new(
        id: impl Into<String>,
        frequency: Frequency,
        observations: impl IntoIterator<Item = (Period, f64)>,
    ) -> Result<Self> {
        let id = id.into();
        let mut map = BTreeMap::new();
        for (period, value) in observations {
            if !value.is_finite() {
                return Err(Error::Validation(format!(
                    "series {id}: non-finite value at {period}"
                )));
            }
            if frequency == Frequency::Quarterly && !period.is_quarter_end() {
                return Err(Error::Validation(format!(
                    "series {id}: quarterly observation at non-quarter-end month {period}"
                )));
            }
            if map.insert(period, value).is_some() {
                return Err(Error::Validation(format!(
                    "series {id}: duplicate observation at {period}"
                )));
            }
        }
        Ok(Series {
            id,
            frequency,
            observations: map,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn observations(&self) -> &BTreeMap<Period, f64> {
        &self.observations
    }

    pub fn value_at(&self, period: Period) -> Option<f64> {
        self.observations.get(&period).copied()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Transform a level series into period-over-period growth rates.
///
/// `g_t = x_t / x_{t-1} - 1` where `t-1` is the previous period at the
/// series' own frequency (prior month for monthly, prior quarter for
/// quarterly). A gap in the input produces a gap in the output: no growth
/// rate is computed across missing periods.
pub fn period_over_period_growth(levels: &Series) -> Result<Series> {
    if levels.len() < 2 {
        return Err(Error::TooFewObservations {
            id: levels.id().to_string(),
        });
    }
    let step = levels.frequency().step_months();
    let mut growth = BTreeMap::new();
    for (&period, &value) in levels.observations() {
        let prev_period = period.add_months(-step);
        if let Some(prev) = levels.value_at(prev_period) {
            if prev == 0.0 {
                return Err(Error::ZeroDenominator {
                    id: levels.id().to_string(),
                    period,
                });
            }
            growth.insert(period, value / prev - 1.0);
        }
    }
    if growth.is_empty() {
        return Err(Error::Validation(format!(
            "series {}: no consecutive-period pairs to compute growth from",
            levels.id()
        )));
    }
    Ok(Series {
        id: levels.id().to_string(),
        frequency: levels.frequency(),
        observations: growth,
    })
}
