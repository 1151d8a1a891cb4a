use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::config::{ModelConfig, ModelKind, TrainConfig};
use super::encode::{encode_samples, EncodedSample};
use super::network::{Network, Prediction};
use crate::backtest::Confusion;
use crate::error::{Error, Result};
use crate::market::{DatasetSplit, Sample};
use crate::nn::{Adam, Parameterized, Tensor};

/// Samples per parallel work unit. Partial gradients are summed in chunk
/// order, so results do not depend on the thread count.
const CHUNK: usize = 8;
const SHUFFLE_SALT: u64 = 0x5348_5546_464c_4531;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub count: usize,
    /// `ce + lambda * mse` for SMSFR, `ce` for MSR.
    pub loss: f64,
    pub ce: f64,
    pub mse: Option<f64>,
    pub accuracy: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub counts: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 0 is the initialization, before any update.
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub train_loss: Option<f64>,
    pub val: EvalMetrics,
}

pub struct BatchOutcome {
    pub loss: f64,
    pub ce: f64,
    pub sq: f64,
    /// Gradients of the batch-mean loss.
    pub grads: Vec<Tensor>,
}

pub fn batch_gradients(net: &Network, batch: &[&EncodedSample]) -> Result<BatchOutcome> {
    if batch.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    let scale = 1.0 / batch.len() as f64;
    let partials = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = net.zero_grads();
            let (mut ce, mut sq) = (0.0, 0.0);
            for s in chunk {
                let (c, q) = net.accumulate_gradients(s, scale, &mut grads)?;
                ce += c;
                sq += q;
            }
            Ok((ce, sq, grads))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut iter = partials.into_iter();
    let (mut ce, mut sq, mut grads) = iter.next().expect("batch is non-empty");
    for (c, q, g) in iter {
        ce += c;
        sq += q;
        for (a, b) in grads.iter_mut().zip(&g) {
            a.add_assign(b);
        }
    }
    ce *= scale;
    sq *= scale;
    let loss = match net.config.kind {
        ModelKind::Msr => ce,
        ModelKind::Smsfr => ce + net.config.lambda * sq,
    };
    Ok(BatchOutcome { loss, ce, sq, grads })
}

pub fn evaluate(net: &Network, data: &[EncodedSample]) -> Result<EvalMetrics> {
    if data.is_empty() {
        return Err(Error::Domain("cannot evaluate on an empty set".into()));
    }
    let rows = data
        .par_iter()
        .map(|s| {
            let (out, _) = net.forward(s)?;
            let (ce, sq) = net.loss_terms(&out, s);
            Ok((ce, sq, u8::from(out.probs[1] > out.probs[0]), s.y))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = Confusion::default();
    let (mut ce, mut sq) = (0.0, 0.0);
    for &(c, q, pred, y) in &rows {
        ce += c;
        sq += q;
        counts.add(pred, y);
    }
    let n = rows.len() as f64;
    ce /= n;
    sq /= n;
    let (loss, mse) = match net.config.kind {
        ModelKind::Msr => (ce, None),
        ModelKind::Smsfr => (ce + net.config.lambda * sq, Some(sq)),
    };
    Ok(EvalMetrics {
        count: rows.len(),
        loss,
        ce,
        mse,
        accuracy: counts.accuracy(),
        ppv: counts.ppv(),
        npv: counts.npv(),
        counts,
    })
}

/// Encodes the train and validation parts of `split` and trains on them.
pub fn train(model: &ModelConfig, config: &TrainConfig, split: &DatasetSplit) -> Result<Checkpoint> {
    let train_data = encode_samples(&split.train, model)?;
    let val_data = encode_samples(&split.validation, model)?;
    train_encoded(model, config, &train_data, &val_data)
}

/// Minimizes the batch-mean loss with Adam, evaluating on `val` after every
/// epoch. From `early_stop_start` on the best validation loss is tracked
/// and training stops after `patience` epochs without improvement; the
/// returned checkpoint holds the best parameters.
pub fn train_encoded(
    model: &ModelConfig,
    config: &TrainConfig,
    train: &[EncodedSample],
    val: &[EncodedSample],
) -> Result<Checkpoint> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Domain(format!(
            "training needs non-empty train and validation sets (got {} / {})",
            train.len(),
            val.len()
        )));
    }
    let mut net = Network::new(model.clone())?;
    let mut adam = Adam::new(config.adam, net.params());
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ SHUFFLE_SALT);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let init = evaluate(&net, val)?;
    info!("epoch 0: val loss {:.5}", init.loss);
    let mut best_loss = init.loss;
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: None,
        val: init,
    }];
    let mut best_epoch = 0;
    let mut best_params: Vec<Tensor> = net.params().into_iter().cloned().collect();
    let start = config.early_stop_start.clamp(1, config.max_epochs.max(1));
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&EncodedSample> = idx.iter().map(|&i| &train[i]).collect();
            let out = batch_gradients(&net, &batch)?;
            if !out.loss.is_finite() || out.grads.iter().any(|g| !g.all_finite()) {
                return Err(Error::Training {
                    epoch,
                    batch: b,
                    msg: format!("non-finite loss {}", out.loss),
                });
            }
            adam.update(net.params_mut(), &out.grads);
            loss_sum += out.loss;
            batches += 1;
        }
        let val_metrics = evaluate(&net, val)?;
        if !val_metrics.loss.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: batches,
                msg: "non-finite validation loss".into(),
            });
        }
        info!(
            "epoch {epoch}: train loss {:.5}, val loss {:.5}, val acc {:.4}",
            loss_sum / batches as f64,
            val_metrics.loss,
            val_metrics.accuracy.unwrap_or(f64::NAN)
        );
        let val_loss = val_metrics.loss;
        history.push(EpochRecord {
            epoch,
            train_loss: Some(loss_sum / batches as f64),
            val: val_metrics,
        });
        if epoch < start {
            continue;
        }
        if epoch == start || val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch;
            best_params = net.params().into_iter().cloned().collect();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                info!("early stop after epoch {epoch}, best epoch {best_epoch}");
                break;
            }
        }
    }
    if config.max_epochs > 0 && best_epoch == 0 {
        warn!("no epoch reached the early-stopping window; keeping the initialization");
    }
    Checkpoint::new(model.clone(), config.clone(), best_params, history, best_epoch)
}

/// Batch inference; the checkpoint is not modified.
pub fn predict(checkpoint: &Checkpoint, samples: &[Sample]) -> Result<Vec<Prediction>> {
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let net = checkpoint.network()?;
    let data = encode_samples(samples, &checkpoint.model)?;
    data.par_iter().map(|s| net.predict_encoded(s)).collect()
}
