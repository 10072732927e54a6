//! Mixed-frequency economic nowcasting.
//!
//! The crate trains two nowcaster families on vintage-snapshotted time
//! series — an ensemble of LSTM networks and a single-factor dynamic factor
//! model — replays historical vintages into prediction-evolution curves,
//! decomposes prediction revisions into per-variable news contributions,
//! and computes the comparison metrics (MAE, RMSE, one-tailed t-test,
//! revision statistics).

pub mod dataset;
pub mod dfm;
pub mod eval;
pub mod error;
pub mod impute;
pub mod lstm;
pub mod news;
pub mod nowcaster;
pub mod optim;
pub mod period;
pub mod series;
pub mod stats;
pub mod synth;
pub mod vintage;

#[cfg(test)]
pub(crate) mod testutil;

pub use dataset::{Column, MixedFrequencyDataset, RaggedEdgeProfile};
pub use error::{Error, Result};
pub use eval::{anchor, backtest_result, day_difference, mae, one_tailed_t_test, replay, revision_stats, rmse, BacktestResult, PredictionCurve};
pub use dfm::{dfm_nowcast, em_fit, kalman_filter, kalman_smoother, StateSpaceModel};
pub use impute::{fill, fill_arma, fill_mean, ArmaOrder, FillMethod};
pub use lstm::{LstmConfig, LstmEnsemble};
pub use news::{decompose, new_data_cells, LinearSurrogate, NewsDecomposition};
pub use nowcaster::Nowcaster;
pub use period::{Period, Quarter};
pub use series::{period_over_period_growth, Frequency, Series};
pub use synth::{simulate, DgpConfig};
pub use vintage::VintageStore;
