//! Mini-batch Adam training with validation-based early stopping.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{sample_rng, Dataset, Sample};
use crate::error::{Error, Result};
use crate::models::{InputNormalizer, TrainableSelector};
use crate::nn::{checkpoint, Adam};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Share of the training split held out for early stopping.
    pub validation_fraction: f64,
    /// Set by the caller; not read from configuration files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 128,
            max_epochs: 100,
            patience: 10,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs", "must be positive"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config("validation_fraction", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean loss over the training samples before the first update.
    pub initial_loss: f64,
    /// Running mean training loss per epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss per epoch; empty when nothing was held out.
    pub validation_loss: Vec<f64>,
    /// 1-based epoch whose parameters were restored.
    pub best_epoch: usize,
    pub best_loss: f64,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.train_loss.len()
    }
}

/// Mean loss of `model` over `samples`, evaluated in parallel with an ordered reduction.
pub fn mean_loss<M: TrainableSelector<f64>>(
    model: &M,
    normalizer: &InputNormalizer,
    samples: &[&Sample],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("mean loss over an empty set"));
    }
    let losses = samples
        .par_iter()
        .map(|s| model.loss(&normalizer.context(s.location, s.orientation), s.label))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

pub fn train<M: TrainableSelector<f64>>(
    model: &mut M,
    normalizer: &InputNormalizer,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let (n_t, n_r) = model.dims();
    if (data.header.tx.len(), data.header.rx.len()) != (n_t, n_r) {
        return Err(Error::invalid(format!(
            "dataset is {}x{} but the model expects {n_t}x{n_r}",
            data.header.tx.len(),
            data.header.rx.len()
        )));
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut sample_rng(cfg.seed, 0));
    let n_val = (data.len() as f64 * cfg.validation_fraction).floor() as usize;
    let n_val = n_val.min(data.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let val: Vec<&Sample> = val_idx.iter().map(|&i| &data.samples[i]).collect();
    let mut train_idx = train_idx.to_vec();

    let train_refs: Vec<&Sample> = train_idx.iter().map(|&i| &data.samples[i]).collect();
    let initial_loss = mean_loss(model, normalizer, &train_refs)?;
    if !initial_loss.is_finite() {
        return Err(Error::NonFinite("initial training loss".into()));
    }

    let mut adam = Adam::new(cfg.learning_rate);
    let mut shuffle_rng = sample_rng(cfg.seed, 1);
    let mut report = TrainReport {
        initial_loss,
        train_loss: Vec::new(),
        validation_loss: Vec::new(),
        best_epoch: 0,
        best_loss: f64::INFINITY,
    };
    let mut best_params = checkpoint::encode(&model.parameters());
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (b, batch) in train_idx.chunks(cfg.batch_size).enumerate() {
            model.zero_grad();
            let mut batch_loss = 0.0;
            for &i in batch {
                let s = &data.samples[i];
                batch_loss += model.accumulate_gradients(
                    &normalizer.context(s.location, s.orientation),
                    s.label,
                )?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss at epoch {epoch}, batch {b}"
                )));
            }
            total += batch_loss;
            let scale = 1.0 / batch.len() as f64;
            let mut params = model.parameters_mut();
            for p in params.iter_mut() {
                p.scale_grad(scale);
            }
            adam.step(&mut params)?;
        }
        let epoch_loss = total / train_idx.len() as f64;
        report.train_loss.push(epoch_loss);

        let monitored = if val.is_empty() {
            epoch_loss
        } else {
            let v = mean_loss(model, normalizer, &val)?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "validation loss at epoch {epoch}"
                )));
            }
            report.validation_loss.push(v);
            v
        };
        log::debug!("epoch {epoch}: train {epoch_loss:.6} monitored {monitored:.6}");

        if monitored < report.best_loss {
            report.best_loss = monitored;
            report.best_epoch = epoch;
            best_params = checkpoint::encode(&model.parameters());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                log::info!(
                    "early stop at epoch {epoch}, best epoch {}",
                    report.best_epoch
                );
                break;
            }
        }
    }
    checkpoint::restore(model, &best_params)?;
    Ok(report)
}
