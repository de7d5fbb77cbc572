use serde::{Deserialize, Serialize};

use super::{CvaeModel, Noise, TRAIN_STREAM};
use crate::error::{Error, Result};
use crate::nn::{mse, AdamConfig, AdamState, Matrix, RngState, RngStream};
use crate::preprocess::Dataset;

/// Losses of one epoch. Training values are batch-size weighted means under
/// dropout and sampled noise; validation values are eval-mode with `z = mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
    /// Validation reconstruction MSE.
    pub val: f64,
    /// Validation mean KL (nats).
    pub val_kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Mean KL over the validation split after the last epoch; a value near
    /// zero means the posterior collapsed onto the prior.
    pub final_kl: f64,
    pub rng_state: RngState,
}

impl TrainReport {
    pub fn first(&self) -> Option<&EpochStats> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    /// Training log as CSV (`epoch,recon,kl,total,val`).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,recon,kl,total,val\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.recon, e.kl, e.total, e.val
            ));
        }
        s
    }
}

pub fn train(model: CvaeModel, dataset: &Dataset) -> Result<(CvaeModel, TrainReport)> {
    train_with(model, dataset, |_| {})
}

/// Trains for `model.config.epochs`, calling `on_epoch` after each epoch.
pub fn train_with(
    mut model: CvaeModel,
    dataset: &Dataset,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(CvaeModel, TrainReport)> {
    let cfg = model.config.clone();
    cfg.validate()?;
    if dataset.n_train == 0 {
        return Err(Error::Invalid("training split is empty".into()));
    }
    let train_x = dataset.train_matrix();
    let val_x = dataset.validation_matrix();
    let mut rng = RngStream::new(cfg.seed).fork(TRAIN_STREAM);
    let mut adam = AdamState::new(AdamConfig {
        lr: cfg.lr,
        ..Default::default()
    });
    let mut order: Vec<usize> = (0..train_x.rows()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut final_kl = 0.0;

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let (mut recon, mut kl, mut total) = (0.0, 0.0, 0.0);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = train_x.select_rows(chunk);
            let noise = Noise::sample(&cfg, chunk.len(), &mut rng);
            let (parts, grads) = model.loss_and_grads(&batch, &noise)?;
            if !parts.total.is_finite() {
                return Err(Error::Diverged {
                    what: "loss",
                    epoch,
                    batch: b,
                });
            }
            adam.step(&mut model.parameters_mut(), &grads.slices())?;
            let w = chunk.len() as f64;
            recon += parts.recon * w;
            kl += parts.kl * w;
            total += parts.total * w;
        }
        let n = train_x.rows() as f64;
        let (val, val_kl) = evaluate(&model, if val_x.rows() > 0 { &val_x } else { &train_x })
            .map_err(|e| match e {
                Error::NonFinite(what) => Error::Diverged {
                    what,
                    epoch,
                    batch: 0,
                },
                other => other,
            })?;
        let stats = EpochStats {
            epoch,
            recon: recon / n,
            kl: kl / n,
            total: total / n,
            val,
            val_kl,
        };
        if !stats.val.is_finite() {
            return Err(Error::Diverged {
                what: "validation loss",
                epoch,
                batch: 0,
            });
        }
        on_epoch(&stats);
        log::debug!(
            "epoch {epoch}: recon {:.6} kl {:.4} total {:.6} val {:.6}",
            stats.recon,
            stats.kl,
            stats.total,
            stats.val
        );
        final_kl = val_kl;
        epochs.push(stats);
    }
    Ok((
        model,
        TrainReport {
            epochs,
            final_kl,
            rng_state: rng.state(),
        },
    ))
}

/// Eval-mode reconstruction MSE with `z = mu`, and mean KL.
pub(crate) fn evaluate(model: &CvaeModel, x: &Matrix) -> Result<(f64, f64)> {
    let (mu, log_var) = model.encode_batch(x)?;
    let cond = x.columns(model.config.feature_dim, model.config.input_dim);
    let out = model.decode_batch(&mu.hstack(&cond)?)?;
    let (recon, _) = mse(&out, x)?;
    Ok((recon, model.kl_mean(&mu, &log_var)))
}
