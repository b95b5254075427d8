//! Small neural models with hand-derived gradients.
//!
//! * [`CnnModel`]: convolutions of height `h × d` over a `T × d` feature
//!   sequence, ReLU, max-over-time pooling, dense softmax layer.
//! * [`FusionModel`]: the same convolutional stack whose pooled vector is
//!   concatenated with a fixed external embedding and fed to a one-hidden-
//!   layer feed-forward classifier.
//! * [`LogisticModel`]: L2-regularized logistic regression.
//!
//! Every model implements [`Differentiable`], so a single SGD loop and a
//! single finite-difference checker serve all three.

mod cnn;
mod container;
mod fusion;
mod gradcheck;
mod logistic;
mod params;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ingest::Label;
use crate::rng::ChaCha8Rng;

pub use cnn::{cnn_fit, conv_forward, CnnModel, FilterBankRef};
pub use container::{read_container, write_container, Container, FORMAT_VERSION, MAGIC};
pub use fusion::{fusion_fit, FusionInput, FusionModel, FUSION_HIDDEN_UNITS};
pub use gradcheck::{grad_check, relative_error, GradCheck, FD_STEP};
pub use logistic::{
    logistic_fit, logistic_objective, logistic_predict, LogisticFit, LogisticModel,
};
pub use params::{ParamArray, ParamSet};
pub use train::{fit_sgd, TrainingLog};

/// Dense row-major matrix; rows are time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: format!("{rows}x{cols} matrix"),
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    context: "matrix row".into(),
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Appends zero rows until the matrix has at least `min_rows` rows.
    pub fn pad_rows(&self, min_rows: usize) -> Matrix {
        let mut m = self.clone();
        if m.rows < min_rows {
            m.data.resize(min_rows * m.cols, 0.0);
            m.rows = min_rows;
        }
        m
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnSpec {
    /// Feature dimension `d` of each time step. Filled in from the data
    /// when left at 0 in a config file.
    pub input_dim: usize,
    pub filter_heights: Vec<usize>,
    pub filters_per_height: usize,
    pub dropout_rate: f64,
    pub output_classes: usize,
}

impl Default for CnnSpec {
    fn default() -> Self {
        CnnSpec {
            input_dim: 0,
            filter_heights: vec![2, 3, 4],
            filters_per_height: 8,
            dropout_rate: 0.5,
            output_classes: 2,
        }
    }
}

impl CnnSpec {
    pub fn with_input_dim(input_dim: usize) -> Self {
        CnnSpec {
            input_dim,
            ..Default::default()
        }
    }

    /// Length of the max-pooled feature vector.
    pub fn pooled_dim(&self) -> usize {
        self.filters_per_height * self.filter_heights.len()
    }

    pub fn max_height(&self) -> usize {
        self.filter_heights.iter().copied().max().unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("CNN input_dim must be positive".into()));
        }
        if self.filter_heights.is_empty() || self.filter_heights.contains(&0) {
            return Err(Error::Config(
                "CNN filter heights must be non-empty and >= 1".into(),
            ));
        }
        if self.filters_per_height == 0 {
            return Err(Error::Config(
                "CNN filters_per_height must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config("CNN dropout_rate must lie in [0, 1)".into()));
        }
        if self.output_classes < 2 {
            return Err(Error::Config(
                "CNN needs at least two output classes".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 16,
            l2: 1e-4,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }
}

/// A model whose per-sample cross-entropy gradient is available in closed
/// form.
pub trait Differentiable {
    type Input;

    fn params(&self) -> &ParamSet;

    fn params_mut(&mut self) -> &mut ParamSet;

    /// Cross-entropy for one sample and its gradient. With `dropout` set the
    /// forward pass runs in training mode.
    fn ce_and_grad(
        &self,
        x: &Self::Input,
        y: Label,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> (f64, ParamSet);

    /// Identifies which linear piece of a piecewise-linear network the
    /// input falls on (argmax positions, active ReLUs). Finite differences
    /// are only meaningful when a perturbation leaves it unchanged.
    fn kink_signature(&self, _x: &Self::Input) -> Vec<u64> {
        Vec::new()
    }

    /// Cross-entropy plus `l2 / 2 · Σ w²`, dropout off.
    fn loss(&self, x: &Self::Input, y: Label, l2: f64) -> f64 {
        self.ce_and_grad(x, y, None).0 + 0.5 * l2 * self.params().weight_sq_norm()
    }

    fn loss_and_grad(&self, x: &Self::Input, y: Label, l2: f64) -> (f64, ParamSet) {
        let (ce, mut g) = self.ce_and_grad(x, y, None);
        g.add_l2_grad(self.params(), l2);
        (ce + 0.5 * l2 * self.params().weight_sq_norm(), g)
    }
}

fn check_labels(labels: impl IntoIterator<Item = Label>, min: usize) -> Result<()> {
    let mut counts = [0usize; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    if counts[0] + counts[1] < min {
        return Err(invalid!(
            "need at least {min} training samples, got {}",
            counts[0] + counts[1]
        ));
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(invalid!("training data contains a single class"));
    }
    Ok(())
}

/// Glorot-uniform initialization in ±√(6 / (fan_in + fan_out)).
fn glorot(rng: &mut ChaCha8Rng, n: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-limit..limit)).collect()
}

/// Inverted dropout mask: entries are 0 or 1/(1 − rate).
fn dropout_mask(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0, 1000.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = softmax(&[-1e4, 0.0]);
        assert!(p[1] > 0.999_999);
    }

    #[test]
    fn padding() {
        let m = Matrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let p = m.pad_rows(3);
        assert_eq!(p.rows(), 3);
        assert_eq!(p.row(2), &[0.0, 0.0]);
        assert_eq!(m.pad_rows(1), m);
    }

    #[test]
    fn default_geometry() {
        let s = CnnSpec::with_input_dim(10);
        assert_eq!(s.pooled_dim(), 24);
        assert_eq!(s.max_height(), 4);
        assert!(s.validate().is_ok());
        assert!(CnnSpec::default().validate().is_err());
    }
}
