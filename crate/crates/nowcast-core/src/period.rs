//! Monthly periods and calendar quarters.
//!
//! Periods are plain (year, month) pairs rather than timestamps; as-of dates
//! of vintages are calendar dates (`chrono::NaiveDate`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A monthly period `(year, month)` with `month` in `1..=12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Period {
    year: i32,
    month: u32,
}

impl Period {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month must be in 1..=12, got {month}");
        Period { year, month }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    /// Months since year 0, used for arithmetic.
    fn index(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_index(idx: i64) -> Self {
        let year = idx.div_euclid(12) as i32;
        let month = (idx.rem_euclid(12) + 1) as u32;
        Period { year, month }
    }

    pub fn add_months(&self, n: i64) -> Self {
        Self::from_index(self.index() + n)
    }

    pub fn next(&self) -> Self {
        self.add_months(1)
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(&self, other: &Period) -> i64 {
        self.index() - other.index()
    }

    /// True for months 3, 6, 9, 12 — where quarterly values live on the grid.
    pub fn is_quarter_end(&self) -> bool {
        self.month % 3 == 0
    }

    pub fn quarter(&self) -> Quarter {
        Quarter::new(self.year, (self.month - 1) / 3 + 1)
    }

    /// First calendar day of this month.
    pub fn first_day(&self) -> chrono::NaiveDate {
        chrono::NaiveDate::from_ymd_opt(self.year, self.month, 1)
            .expect("month validated at construction")
    }

    /// Inclusive iterator over `self..=end`.
    pub fn range_to(&self, end: Period) -> impl Iterator<Item = Period> {
        let start = self.index();
        let stop = end.index();
        (start..=stop).map(Period::from_index)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Period {
    type Err = String;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| format!("expected YYYY-MM, got {s:?}"))?;
        let year: i32 = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
        if !(1..=12).contains(&month) {
            return Err(format!("month out of range in {s:?}"));
        }
        Ok(Period { year, month })
    }
}

impl TryFrom<String> for Period {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Period> for String {
    fn from(p: Period) -> String {
        p.to_string()
    }
}

/// A calendar quarter `(year, q)` with `q` in `1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Quarter {
    year: i32,
    q: u32,
}

impl Quarter {
    pub fn new(year: i32, q: u32) -> Self {
        assert!((1..=4).contains(&q), "quarter must be in 1..=4, got {q}");
        Quarter { year, q }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn number(&self) -> u32 {
        self.q
    }

    /// The quarter-end month carrying this quarter's value on a monthly grid.
    pub fn end_month(&self) -> Period {
        Period::new(self.year, self.q * 3)
    }

    /// The first month of the quarter.
    pub fn first_month(&self) -> Period {
        Period::new(self.year, self.q * 3 - 2)
    }

    pub fn add_quarters(&self, n: i64) -> Self {
        self.end_month().add_months(3 * n).quarter()
    }

    pub fn next(&self) -> Self {
        self.add_quarters(1)
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = String;

    /// Parses `YYYYQn` (for example `2020Q2`).
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (y, q) = s
            .split_once(['Q', 'q'])
            .ok_or_else(|| format!("expected YYYYQn, got {s:?}"))?;
        let year: i32 = y.trim().parse().map_err(|_| format!("bad year in {s:?}"))?;
        let q: u32 = q.trim().parse().map_err(|_| format!("bad quarter in {s:?}"))?;
        if !(1..=4).contains(&q) {
            return Err(format!("quarter out of range in {s:?}"));
        }
        Ok(Quarter { year, q })
    }
}

impl TryFrom<String> for Quarter {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Quarter> for String {
    fn from(q: Quarter) -> String {
        q.to_string()
    }
}
