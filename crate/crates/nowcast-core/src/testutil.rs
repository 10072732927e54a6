//! Shared fixtures for unit tests.

use crate::dataset::MixedFrequencyDataset;
use crate::period::Period;
use crate::series::{Frequency, Series};

/// `quarters * 3` months of a noise-free dataset where the quarterly target
/// is an exact linear function of the two monthly features at quarter end.
pub(crate) fn learnable_fixture(quarters: usize) -> MixedFrequencyDataset {
    let start = Period::new(2010, 1);
    let months = quarters * 3;
    let f1: Vec<(Period, f64)> = (0..months)
        .map(|m| (start.add_months(m as i64), ((m as f64) * 0.35).sin() * 0.1))
        .collect();
    let f2: Vec<(Period, f64)> = (0..months)
        .map(|m| (start.add_months(m as i64), ((m as f64) * 0.2).cos() * 0.05))
        .collect();
    let target: Vec<(Period, f64)> = (0..months)
        .map(|m| (start.add_months(m as i64), m))
        .filter(|(p, _)| p.is_quarter_end())
        .map(|(p, m)| {
            let a = ((m as f64) * 0.35).sin() * 0.1;
            let b = ((m as f64) * 0.2).cos() * 0.05;
            (p, 0.5 * a - 0.8 * b + 0.01)
        })
        .collect();
    let series = vec![
        Series::new("f1", Frequency::Monthly, f1).unwrap(),
        Series::new("f2", Frequency::Monthly, f2).unwrap(),
        Series::new("gdp", Frequency::Quarterly, target).unwrap(),
    ];
    MixedFrequencyDataset::align(
        &series,
        (start, start.add_months(months as i64 - 1)),
        "gdp",
        false,
    )
    .unwrap()
}
