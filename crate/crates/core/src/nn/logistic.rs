use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_labels, Differentiable, ParamSet};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::rng::{self, ChaCha8Rng};

const GRAD_TOL: f64 = 1e-6;
const MAX_ITER: usize = 10_000;

/// Binary logistic regression; class AD is the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    params: ParamSet,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        let mut params = ParamSet::default();
        params.push_zeros("lr.weight", vec![1, dim]);
        params.push_zeros("lr.bias", vec![1]);
        LogisticModel { params }
    }

    pub fn from_parts(weights: Vec<f64>, bias: f64) -> Self {
        let mut params = ParamSet::default();
        params.push("lr.weight", vec![1, weights.len()], weights);
        params.push("lr.bias", vec![1], vec![bias]);
        LogisticModel { params }
    }

    pub fn from_params(params: ParamSet) -> Result<Self> {
        let ok = params.arrays().len() == 2
            && params.arrays()[0].name == "lr.weight"
            && params.arrays()[1].name == "lr.bias"
            && params.arrays()[1].data.len() == 1;
        if !ok {
            return Err(Error::Validation(
                "parameter layout is not a logistic model".into(),
            ));
        }
        Ok(LogisticModel { params })
    }

    pub fn dim(&self) -> usize {
        self.params.array(0).len()
    }

    pub fn weights(&self) -> &[f64] {
        self.params.array(0)
    }

    pub fn bias(&self) -> f64 {
        self.params.array(1)[0]
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.bias()
            + self
                .weights()
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }

    /// `[p_cn, p_ad]`.
    pub fn predict(&self, x: &[f64]) -> Result<[f64; 2]> {
        let p = logistic_predict(self, x)?;
        Ok([1.0 - p, p])
    }
}

impl Differentiable for LogisticModel {
    type Input = Vec<f64>;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn ce_and_grad(
        &self,
        x: &Vec<f64>,
        y: Label,
        _dropout: Option<&mut ChaCha8Rng>,
    ) -> (f64, ParamSet) {
        let z = self.score(x);
        let t = y.index() as f64;
        let ce = softplus(z) - t * z;
        let r = sigmoid(z) - t;
        let mut g = self.params.zeros_like();
        g.array_mut(0)
            .iter_mut()
            .zip(x)
            .for_each(|(gw, v)| *gw = r * v);
        g.array_mut(1)[0] = r;
        (ce, g)
    }
}

/// `P(AD | x)`.
pub fn logistic_predict(model: &LogisticModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::Dimension {
            context: "logistic regression input".into(),
            expected: model.dim(),
            actual: x.len(),
        });
    }
    Ok(sigmoid(model.score(x)))
}

/// Mean log-loss plus `l2 / 2 · ‖w‖²`; the bias is not penalized.
pub fn logistic_objective(model: &LogisticModel, data: &[(Vec<f64>, Label)], l2: f64) -> f64 {
    let ce: f64 = data
        .iter()
        .map(|(x, y)| model.ce_and_grad(x, *y, None).0)
        .sum();
    ce / data.len() as f64 + 0.5 * l2 * model.params.weight_sq_norm()
}

fn objective_and_grad(
    model: &LogisticModel,
    data: &[(Vec<f64>, Label)],
    l2: f64,
) -> (f64, ParamSet) {
    let mut grad = model.params.zeros_like();
    let mut ce = 0.0;
    let scale = 1.0 / data.len() as f64;
    for (x, y) in data {
        let (c, g) = model.ce_and_grad(x, *y, None);
        ce += c;
        grad.add_scaled(&g, scale);
    }
    grad.add_l2_grad(&model.params, l2);
    (ce * scale + 0.5 * l2 * model.params.weight_sq_norm(), grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub l2: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Accelerated full-batch gradient descent with adaptive restart. Stops when
/// the gradient's largest component falls below 1e-6.
pub fn logistic_fit(
    data: &[(Vec<f64>, Label)],
    l2: f64,
    seed: u64,
) -> Result<(LogisticModel, LogisticFit)> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::Config(format!(
            "l2 must be a non-negative number, got {l2}"
        )));
    }
    check_labels(data.iter().map(|(_, y)| *y), 2)?;
    let dim = data[0].0.len();
    for (i, (x, _)) in data.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::Dimension {
                context: format!("logistic regression sample {i}"),
                expected: dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "logistic regression sample {i} is not finite"
            )));
        }
    }
    let mean_sq: f64 = data
        .iter()
        .map(|(x, _)| 1.0 + x.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / data.len() as f64;
    let step = 1.0 / (0.25 * mean_sq + l2);

    let mut r = rng::derive(seed, 2);
    let init: Vec<f64> = (0..dim).map(|_| r.random_range(-0.01..0.01)).collect();
    let mut w = LogisticModel::from_parts(init, 0.0);
    let (mut fw, mut gw) = objective_and_grad(&w, data, l2);
    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        if gw.iter().fold(0.0f64, |m, v| m.max(v.abs())) < GRAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let (_, gy) = objective_and_grad(&y, data, l2);
        let mut next = y.clone();
        next.params.add_scaled(&gy, -step);
        let (fn_, gn) = objective_and_grad(&next, data, l2);
        if fn_ > fw {
            y = w.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut momentum = next.params.clone();
        momentum.add_scaled(&w.params, -1.0);
        y = next.clone();
        y.params.add_scaled(&momentum, (t - 1.0) / t_next);
        t = t_next;
        w = next;
        fw = fn_;
        gw = gn;
    }
    if !fw.is_finite() {
        return Err(Error::Numeric(
            "logistic regression objective is not finite".into(),
        ));
    }
    Ok((
        w,
        LogisticFit {
            l2,
            objective: fw,
            iterations,
            converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stable_link() {
        assert_abs_diff_eq!(softplus(800.0), 800.0);
        assert_abs_diff_eq!(softplus(-800.0), 0.0);
        assert_abs_diff_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
    }

    #[test]
    fn symmetric_data_gives_zero_model() {
        let data = vec![
            (vec![1.0], Label::Ad),
            (vec![-1.0], Label::Ad),
            (vec![1.0], Label::Cn),
            (vec![-1.0], Label::Cn),
        ];
        let (m, fit) = logistic_fit(&data, 0.1, 3).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(m.weights()[0], 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(m.bias(), 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(fit.objective, std::f64::consts::LN_2, epsilon = 1e-9);
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(vec![1.0], Label::Ad), (vec![2.0], Label::Ad)];
        assert!(logistic_fit(&data, 0.1, 0).unwrap_err().is_validation());
    }

    #[test]
    fn predict_checks_dimension() {
        let m = LogisticModel::zeros(3);
        assert!(matches!(m.predict(&[1.0]), Err(Error::Dimension { .. })));
        assert_eq!(m.predict(&[0.0; 3]).unwrap(), [0.5, 0.5]);
    }
}
