//! Ensembles of identically configured networks and their persistence.

use serde::{Deserialize, Serialize};

use crate::dataset::MixedFrequencyDataset;
use crate::error::{Error, Result};
use crate::impute::{fill, FillMethod};
use crate::nowcaster::Nowcaster;
use crate::period::Quarter;

use super::config::LstmConfig;
use super::network::LstmParameters;

/// The filled `n_timesteps x features` block ending at the target quarter's
/// end month. The grid is extended with missing rows first when the quarter
/// lies beyond it, so trailing fills cover the extension.
pub fn prediction_window(
    ds: &MixedFrequencyDataset,
    target: Quarter,
    n_timesteps: usize,
    fill_method: FillMethod,
) -> Result<Vec<Vec<f64>>> {
    let end_period = target.end_month();
    let extended = ds.extend_to(end_period);
    let Some(end_row) = extended.row_of_period(end_period) else {
        return Err(Error::WindowBeforeGrid {
            grid_start: extended.start(),
        });
    };
    if end_row + 1 < n_timesteps {
        return Err(Error::WindowBeforeGrid {
            grid_start: extended.start(),
        });
    }
    let filled = fill(&extended, fill_method)?;
    let target_col = filled.target_index();
    let feature_cols: Vec<usize> = (0..filled.n_cols()).filter(|&c| c != target_col).collect();
    Ok((end_row + 1 - n_timesteps..=end_row)
        .map(|row| {
            feature_cols
                .iter()
                .map(|&c| filled.value(row, c).expect("filled dataset is dense"))
                .collect()
        })
        .collect())
}

/// A trained collection of identically configured networks whose outputs
/// are averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmEnsemble {
    config: LstmConfig,
    members: Vec<LstmParameters>,
    /// First and last target quarter used in training.
    training_window: (Quarter, Quarter),
}

impl LstmEnsemble {
    pub(crate) fn new(
        config: LstmConfig,
        members: Vec<LstmParameters>,
        training_window: (Quarter, Quarter),
    ) -> Self {
        debug_assert_eq!(members.len(), config.n_networks);
        LstmEnsemble {
            config,
            members,
            training_window,
        }
    }

    /// Assemble an ensemble from pre-trained members. The member count must
    /// match the config.
    pub fn from_members(
        config: LstmConfig,
        members: Vec<LstmParameters>,
        training_window: (Quarter, Quarter),
    ) -> Result<Self> {
        config.validate()?;
        if members.len() != config.n_networks {
            return Err(Error::Validation(format!(
                "{} members but config.n_networks is {}",
                members.len(),
                config.n_networks
            )));
        }
        Ok(LstmEnsemble::new(config, members, training_window))
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    pub fn members(&self) -> &[LstmParameters] {
        &self.members
    }

    pub fn training_window(&self) -> (Quarter, Quarter) {
        self.training_window
    }

    /// Nowcast: fill the vintage per the configured method, build the
    /// single window ending at the target quarter's end month, and average
    /// the member forward passes in member order.
    pub fn predict(&self, vintage: &MixedFrequencyDataset, target: Quarter) -> Result<f64> {
        let window = prediction_window(
            vintage,
            target,
            self.config.n_timesteps,
            self.config.fill_method,
        )?;
        let mut sum = 0.0;
        for member in &self.members {
            sum += member.forward(&window)?;
        }
        Ok(sum / self.members.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ens: LstmEnsemble = serde_json::from_str(json)?;
        if ens.members.len() != ens.config.n_networks {
            return Err(Error::Validation(format!(
                "model file has {} members but the config says {}",
                ens.members.len(),
                ens.config.n_networks
            )));
        }
        Ok(ens)
    }
}

impl Nowcaster for LstmEnsemble {
    fn model_id(&self) -> &str {
        "lstm"
    }

    fn predict(&self, vintage: &MixedFrequencyDataset, target: Quarter) -> Result<f64> {
        LstmEnsemble::predict(self, vintage, target)
    }
}
