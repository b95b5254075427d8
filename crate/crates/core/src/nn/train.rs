use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Differentiable, TrainConfig};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::rng;

/// Full-dataset objective (dropout off) before training and after every
/// epoch, so `epoch_loss.len() == epochs + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epoch_loss: Vec<f64>,
}

impl TrainingLog {
    pub fn initial_loss(&self) -> f64 {
        self.epoch_loss[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self
            .epoch_loss
            .last()
            .expect("log always has the initial entry")
    }
}

fn dataset_loss<M: Differentiable>(model: &M, data: &[(M::Input, Label)], l2: f64) -> f64 {
    let ce: f64 = data
        .iter()
        .map(|(x, y)| model.ce_and_grad(x, *y, None).0)
        .sum();
    ce / data.len() as f64 + 0.5 * l2 * model.params().weight_sq_norm()
}

/// Mini-batch SGD with classical momentum on mean cross-entropy plus L2.
///
/// The seed in `cfg` fixes batch order and dropout masks. A non-finite loss
/// or parameter aborts with [`Error::Numeric`].
pub fn fit_sgd<M: Differentiable>(
    model: &mut M,
    data: &[(M::Input, Label)],
    cfg: &TrainConfig,
    use_dropout: bool,
) -> Result<TrainingLog> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Validation("empty training set".into()));
    }
    let mut rng = rng::derive(cfg.seed, 1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut velocity = model.params().zeros_like();
    let mut log = TrainingLog {
        epoch_loss: vec![dataset_loss(model, data, cfg.l2)],
    };
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = model.params().zeros_like();
            for &i in batch {
                let (x, y) = &data[i];
                let dropout = if use_dropout { Some(&mut rng) } else { None };
                let (_, g) = model.ce_and_grad(x, *y, dropout);
                grad.add_scaled(&g, 1.0 / batch.len() as f64);
            }
            grad.add_l2_grad(model.params(), cfg.l2);
            velocity.scale(cfg.momentum);
            velocity.add_scaled(&grad, -cfg.learning_rate);
            model.params_mut().add_scaled(&velocity, 1.0);
        }
        let loss = dataset_loss(model, data, cfg.l2);
        if !loss.is_finite() || !model.params().all_finite() {
            return Err(Error::Numeric(format!(
                "training diverged at epoch {epoch} (loss {loss})"
            )));
        }
        log.epoch_loss.push(loss);
    }
    Ok(log)
}
