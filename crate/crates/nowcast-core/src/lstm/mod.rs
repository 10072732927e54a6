//! LSTM ensemble nowcaster: sample construction, training, prediction,
//! and persistence.

mod config;
mod ensemble;
mod network;
mod train;

pub use config::LstmConfig;
pub use ensemble::{prediction_window, LstmEnsemble};
pub use network::{assign_weights, flatten_weights, loss_gradient, LstmParameters};
pub use train::{build_samples, standardization_stats, train, Samples};
