//! Ensemble and training configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impute::FillMethod;

/// Configuration for building and training an LSTM ensemble.
///
/// `batch_size == 0` means full-sample batches. Every field is part of the
/// persisted model document, so two runs from the same config and data are
/// reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    /// Trailing monthly rows per sample; must span at least one quarter.
    pub n_timesteps: usize,
    pub hidden_size: usize,
    pub n_layers: usize,
    pub n_networks: usize,
    pub learning_rate: f64,
    pub n_epochs: usize,
    /// 0 = full sample.
    pub batch_size: usize,
    pub seed: u64,
    pub fill_method: FillMethod,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            n_timesteps: 12,
            hidden_size: 16,
            n_layers: 1,
            n_networks: 10,
            learning_rate: 1e-2,
            n_epochs: 200,
            batch_size: 0,
            seed: 0,
            fill_method: FillMethod::Mean,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_timesteps < 3 {
            return Err(Error::Validation(
                "n_timesteps must be >= 3 (one quarter of monthly context)".to_string(),
            ));
        }
        if self.hidden_size == 0 || self.n_layers == 0 || self.n_networks == 0 {
            return Err(Error::Validation(
                "hidden_size, n_layers and n_networks must be positive".to_string(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Validation("learning_rate must be positive".to_string()));
        }
        if self.n_epochs == 0 {
            return Err(Error::Validation("n_epochs must be positive".to_string()));
        }
        if let FillMethod::Arma { p, q } = self.fill_method {
            crate::impute::ArmaOrder::new(p, q)?;
        }
        Ok(())
    }
}
