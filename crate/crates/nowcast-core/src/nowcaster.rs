//! Common interface for anything that can turn a vintage snapshot into a
//! point nowcast for a target quarter.

use crate::dataset::MixedFrequencyDataset;
use crate::error::Result;
use crate::period::Quarter;

/// A point-nowcast producer. Implementations must be pure: the same
/// snapshot and target quarter always yield the same prediction.
pub trait Nowcaster {
    /// Short identifier used in reports ("lstm", "dfm", ...).
    fn model_id(&self) -> &str;

    /// Nowcast the target series' growth rate for `target` given the data
    /// available in `vintage`.
    fn predict(&self, vintage: &MixedFrequencyDataset, target: Quarter) -> Result<f64>;
}
