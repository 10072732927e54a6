//! Sample construction and ensemble training (Adam on mean-squared error).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::MixedFrequencyDataset;
use crate::error::{Error, Result};
use crate::period::Quarter;

use super::config::LstmConfig;
use super::ensemble::LstmEnsemble;
use super::network::{LstmParameters, WeightSet};

/// Gradient clip threshold on the global parameter-gradient norm.
const GRAD_CLIP_NORM: f64 = 100.0;

/// Supervised samples: one window per observed target value.
#[derive(Debug, Clone)]
pub struct Samples {
    /// `[sample][timestep][feature]`
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<f64>,
    /// Target quarter of each sample, chronological.
    pub quarters: Vec<Quarter>,
}

/// Build one sample per observed target value whose quarter-end month has
/// at least `n_timesteps` preceding-and-including rows. The window is the
/// `n_timesteps x features` block ending at that month; features exclude
/// the target column.
pub fn build_samples(ds: &MixedFrequencyDataset, n_timesteps: usize) -> Result<Samples> {
    if !ds.is_dense_ex_target() {
        return Err(Error::Validation(
            "dataset has missing non-target cells; fill it before building samples".to_string(),
        ));
    }
    let target = ds.target_index();
    let feature_cols: Vec<usize> = (0..ds.n_cols()).filter(|&c| c != target).collect();

    let mut samples = Samples {
        inputs: Vec::new(),
        targets: Vec::new(),
        quarters: Vec::new(),
    };
    for row in 0..ds.n_rows() {
        let period = ds.period_of_row(row);
        if !period.is_quarter_end() {
            continue;
        }
        let Some(y) = ds.value(row, target) else {
            continue;
        };
        if row + 1 < n_timesteps {
            continue;
        }
        let window: Vec<Vec<f64>> = (row + 1 - n_timesteps..=row)
            .map(|r| {
                feature_cols
                    .iter()
                    .map(|&c| ds.value(r, c).expect("dense checked above"))
                    .collect()
            })
            .collect();
        samples.inputs.push(window);
        samples.targets.push(y);
        samples.quarters.push(period.quarter());
    }
    if samples.inputs.is_empty() {
        return Err(Error::NoEligibleTargets);
    }
    Ok(samples)
}

/// Per-feature mean and (population) standard deviation over all sample
/// windows. Deviations below 1e-12 are clamped to 1 so constant features
/// pass through unscaled.
pub fn standardization_stats(inputs: &[Vec<Vec<f64>>]) -> (Vec<f64>, Vec<f64>) {
    let n_features = inputs[0][0].len();
    let mut mean = vec![0.0; n_features];
    let mut count = 0usize;
    for window in inputs {
        for row in window {
            for (j, &v) in row.iter().enumerate() {
                mean[j] += v;
            }
            count += 1;
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut var = vec![0.0; n_features];
    for window in inputs {
        for row in window {
            for (j, &v) in row.iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
    }
    let sd: Vec<f64> = var
        .iter()
        .map(|&s| {
            let sd = (s / count as f64).sqrt();
            if sd < 1e-12 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    (mean, sd)
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

impl AdamState {
    fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step as i32);
        let bc2 = 1.0 - BETA2.powi(self.step as i32);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
}

fn train_member(
    config: &LstmConfig,
    samples: &Samples,
    mean: &[f64],
    sd: &[f64],
    member: usize,
) -> Result<LstmParameters> {
    let n_features = mean.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(member as u64));
    let mut params = LstmParameters::init(
        n_features,
        config.hidden_size,
        config.n_layers,
        &mut rng,
        mean.to_vec(),
        sd.to_vec(),
    );

    let n = samples.inputs.len();
    let batch_size = if config.batch_size == 0 || config.batch_size > n {
        n
    } else {
        config.batch_size
    };
    let mut adam = AdamState::new(params.weights.param_count());
    let mut flat = params.weights.flatten();

    for epoch in 0..config.n_epochs {
        for chunk_start in (0..n).step_by(batch_size) {
            let chunk_end = (chunk_start + batch_size).min(n);
            let chunk_len = chunk_end - chunk_start;
            let mut grads = WeightSet::zeros(n_features, config.hidden_size, config.n_layers);
            let mut loss = 0.0;
            for s in chunk_start..chunk_end {
                let (pred, cache) = params.forward_cached(&samples.inputs[s])?;
                let err = pred - samples.targets[s];
                loss += err * err;
                let dpred = 2.0 * err / chunk_len as f64;
                params.backward(&cache, dpred, &mut grads);
            }
            loss /= chunk_len as f64;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, member });
            }

            let mut g = grads.flatten();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > GRAD_CLIP_NORM {
                let scale = GRAD_CLIP_NORM / norm;
                for v in &mut g {
                    *v *= scale;
                }
            }
            adam.update(&mut flat, &g, config.learning_rate);
            params.weights.assign_from_flat(&flat);
        }
    }
    Ok(params)
}

/// Train `config.n_networks` members on the filled dataset. Member `i` is
/// initialized from `seed + i`; standardization statistics are computed
/// once on the training inputs and frozen into every member. Deterministic
/// given config and data.
pub fn train(config: &LstmConfig, ds: &MixedFrequencyDataset) -> Result<LstmEnsemble> {
    config.validate()?;
    let samples = build_samples(ds, config.n_timesteps)?;
    let (mean, sd) = standardization_stats(&samples.inputs);

    let mut members = Vec::with_capacity(config.n_networks);
    for member in 0..config.n_networks {
        members.push(train_member(config, &samples, &mean, &sd, member)?);
    }
    Ok(LstmEnsemble::new(
        config.clone(),
        members,
        (
            *samples.quarters.first().expect("nonempty samples"),
            *samples.quarters.last().expect("nonempty samples"),
        ),
    ))
}
