use super::{
    check_labels, dropout_mask, glorot, softmax, CnnSpec, Differentiable, Matrix, ParamSet,
    TrainConfig, TrainingLog,
};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::rng::{self, ChaCha8Rng};

/// Borrowed view of one bank of same-height filters.
///
/// `weights` is laid out `[filter][row][col]`, i.e. `n_filters × height × dim`.
#[derive(Debug, Clone, Copy)]
pub struct FilterBankRef<'a> {
    pub height: usize,
    pub dim: usize,
    pub weights: &'a [f64],
    pub bias: &'a [f64],
}

impl FilterBankRef<'_> {
    pub fn n_filters(&self) -> usize {
        self.bias.len()
    }
}

pub(crate) struct ConvOut {
    pub pooled: Vec<f64>,
    /// Time step at which each filter's response peaked.
    pub argmax: Vec<usize>,
}

/// Valid cross-correlation over time, ReLU, then max over time; one value
/// per filter, banks concatenated in order.
pub fn conv_forward(x: &Matrix, banks: &[FilterBankRef<'_>]) -> Result<Vec<f64>> {
    conv_forward_cached(x, banks).map(|o| o.pooled)
}

pub(crate) fn conv_forward_cached(x: &Matrix, banks: &[FilterBankRef<'_>]) -> Result<ConvOut> {
    let d = x.cols();
    let t_len = x.rows();
    let total: usize = banks.iter().map(FilterBankRef::n_filters).sum();
    let mut out = ConvOut {
        pooled: Vec::with_capacity(total),
        argmax: Vec::with_capacity(total),
    };
    for bank in banks {
        if bank.dim != d {
            return Err(Error::Dimension {
                context: "filter width vs feature dimension".into(),
                expected: bank.dim,
                actual: d,
            });
        }
        if t_len < bank.height {
            return Err(Error::Dimension {
                context: format!("sequence shorter than filter height {}", bank.height),
                expected: bank.height,
                actual: t_len,
            });
        }
        let h = bank.height;
        let window = h * d;
        for f in 0..bank.n_filters() {
            let w = &bank.weights[f * window..(f + 1) * window];
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for t in 0..=(t_len - h) {
                let xs = &x.as_slice()[t * d..t * d + window];
                let v = bank.bias[f] + w.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                if v > best {
                    best = v;
                    arg = t;
                }
            }
            out.pooled.push(best.max(0.0));
            out.argmax.push(arg);
        }
    }
    Ok(out)
}

/// Back-propagates `dpooled` into the conv arrays, which must be the first
/// `2 × banks` arrays of `grads` (weight, bias alternating).
pub(crate) fn conv_backward(
    x: &Matrix,
    heights: &[usize],
    n_filters: usize,
    out: &ConvOut,
    dpooled: &[f64],
    grads: &mut ParamSet,
) {
    let d = x.cols();
    for (k, &h) in heights.iter().enumerate() {
        let window = h * d;
        for f in 0..n_filters {
            let idx = k * n_filters + f;
            if out.pooled[idx] <= 0.0 || dpooled[idx] == 0.0 {
                continue;
            }
            let g = dpooled[idx];
            let t = out.argmax[idx];
            let xs = &x.as_slice()[t * d..t * d + window];
            let gw = &mut grads.array_mut(2 * k)[f * window..(f + 1) * window];
            for (a, b) in gw.iter_mut().zip(xs) {
                *a += g * b;
            }
            grads.array_mut(2 * k + 1)[f] += g;
        }
    }
}

pub(crate) fn init_conv(params: &mut ParamSet, spec: &CnnSpec, rng: Option<&mut ChaCha8Rng>) {
    let f = spec.filters_per_height;
    let d = spec.input_dim;
    let mut rng = rng;
    for (k, &h) in spec.filter_heights.iter().enumerate() {
        let shape = vec![f, h, d];
        match rng.as_deref_mut() {
            Some(r) => params.push(
                format!("conv{k}.weight"),
                shape,
                glorot(r, f * h * d, h * d, f),
            ),
            None => params.push_zeros(format!("conv{k}.weight"), shape),
        }
        params.push_zeros(format!("conv{k}.bias"), vec![f]);
    }
}

pub(crate) fn banks<'a>(spec: &CnnSpec, params: &'a ParamSet) -> Vec<FilterBankRef<'a>> {
    spec.filter_heights
        .iter()
        .enumerate()
        .map(|(k, &h)| FilterBankRef {
            height: h,
            dim: spec.input_dim,
            weights: params.array(2 * k),
            bias: params.array(2 * k + 1),
        })
        .collect()
}

pub(crate) fn conv_signature(out: &ConvOut) -> impl Iterator<Item = u64> + '_ {
    out.argmax
        .iter()
        .zip(&out.pooled)
        .map(|(&a, &p)| (a as u64) << 1 | u64::from(p > 0.0))
}

pub(crate) fn log_softmax_ce(z: &[f64], y: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[y]
}

/// Sequence classifier: conv banks → max-over-time → dropout → dense →
/// softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    spec: CnnSpec,
    params: ParamSet,
}

impl CnnModel {
    /// Glorot-initialized weights, zero biases; the seed fixes every value.
    pub fn new(spec: CnnSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng::derive(seed, 0);
        let mut params = ParamSet::default();
        init_conv(&mut params, &spec, Some(&mut rng));
        let (c, p) = (spec.output_classes, spec.pooled_dim());
        params.push("dense.weight", vec![c, p], glorot(&mut rng, c * p, p, c));
        params.push_zeros("dense.bias", vec![c]);
        Ok(CnnModel { spec, params })
    }

    /// All parameters zero.
    pub fn zeroed(spec: CnnSpec) -> Result<Self> {
        spec.validate()?;
        let mut params = ParamSet::default();
        init_conv(&mut params, &spec, None);
        params.push_zeros("dense.weight", vec![spec.output_classes, spec.pooled_dim()]);
        params.push_zeros("dense.bias", vec![spec.output_classes]);
        Ok(CnnModel { spec, params })
    }

    pub fn from_params(spec: CnnSpec, params: ParamSet) -> Result<Self> {
        let template = CnnModel::zeroed(spec)?;
        if !template.params.same_layout(&params) {
            return Err(Error::Validation(
                "parameter layout does not match CNN spec".into(),
            ));
        }
        Ok(CnnModel {
            spec: template.spec,
            params,
        })
    }

    pub fn spec(&self) -> &CnnSpec {
        &self.spec
    }

    pub fn banks(&self) -> Vec<FilterBankRef<'_>> {
        banks(&self.spec, &self.params)
    }

    fn dense_index(&self) -> usize {
        2 * self.spec.filter_heights.len()
    }

    /// Max-pooled feature vector (length [`CnnSpec::pooled_dim`]).
    pub fn pooled(&self, x: &Matrix) -> Result<Vec<f64>> {
        conv_forward(x, &self.banks())
    }

    /// Class probabilities. Dropout is applied only when `train_rng` is set.
    pub fn forward(&self, x: &Matrix, train_rng: Option<&mut ChaCha8Rng>) -> Result<Vec<f64>> {
        if !self.params.all_finite() {
            return Err(Error::Numeric("CNN has non-finite parameters".into()));
        }
        let mut pooled = self.pooled(x)?;
        if let Some(rng) = train_rng {
            let mask = dropout_mask(rng, pooled.len(), self.spec.dropout_rate);
            pooled.iter_mut().zip(&mask).for_each(|(p, m)| *p *= m);
        }
        Ok(softmax(&self.logits(&pooled)))
    }

    fn logits(&self, pooled: &[f64]) -> Vec<f64> {
        let w = self.params.array(self.dense_index());
        let b = self.params.array(self.dense_index() + 1);
        let p = pooled.len();
        (0..self.spec.output_classes)
            .map(|c| {
                b[c] + w[c * p..(c + 1) * p]
                    .iter()
                    .zip(pooled)
                    .map(|(a, x)| a * x)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Evaluation-mode `[p_cn, p_ad]`; sequences shorter than the tallest
    /// filter are zero-padded at the tail.
    pub fn predict(&self, x: &Matrix) -> Result<[f64; 2]> {
        if self.spec.output_classes != 2 {
            return Err(Error::Config(
                "binary prediction needs output_classes = 2".into(),
            ));
        }
        let p = self.forward(&x.pad_rows(self.spec.max_height()), None)?;
        Ok([p[0], p[1]])
    }
}

impl Differentiable for CnnModel {
    type Input = Matrix;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn ce_and_grad(
        &self,
        x: &Matrix,
        y: Label,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> (f64, ParamSet) {
        let x = x.pad_rows(self.spec.max_height());
        let conv = conv_forward_cached(&x, &self.banks()).expect("input validated by caller");
        let n_pool = conv.pooled.len();
        let mask = match dropout {
            Some(rng) => dropout_mask(rng, n_pool, self.spec.dropout_rate),
            None => vec![1.0; n_pool],
        };
        let dropped: Vec<f64> = conv.pooled.iter().zip(&mask).map(|(p, m)| p * m).collect();
        let z = self.logits(&dropped);
        let ce = log_softmax_ce(&z, y.index());
        let mut dz = softmax(&z);
        dz[y.index()] -= 1.0;

        let mut grads = self.params.zeros_like();
        let di = self.dense_index();
        let w = self.params.array(di);
        let mut dpooled = vec![0.0; n_pool];
        {
            let gw = grads.array_mut(di);
            for (c, &g) in dz.iter().enumerate() {
                for j in 0..n_pool {
                    gw[c * n_pool + j] += g * dropped[j];
                    dpooled[j] += w[c * n_pool + j] * g;
                }
            }
        }
        grads
            .array_mut(di + 1)
            .iter_mut()
            .zip(&dz)
            .for_each(|(b, g)| *b += g);
        dpooled.iter_mut().zip(&mask).for_each(|(d, m)| *d *= m);
        conv_backward(
            &x,
            &self.spec.filter_heights,
            self.spec.filters_per_height,
            &conv,
            &dpooled,
            &mut grads,
        );
        (ce, grads)
    }

    fn kink_signature(&self, x: &Matrix) -> Vec<u64> {
        let x = x.pad_rows(self.spec.max_height());
        let conv = conv_forward_cached(&x, &self.banks()).expect("input validated by caller");
        conv_signature(&conv).collect()
    }
}

/// Trains a CNN by momentum SGD. Needs at least two samples covering both
/// classes.
pub fn cnn_fit(
    dataset: &[(Matrix, Label)],
    spec: &CnnSpec,
    cfg: &TrainConfig,
) -> Result<(CnnModel, TrainingLog)> {
    spec.validate()?;
    cfg.validate()?;
    check_labels(dataset.iter().map(|(_, y)| *y), 2)?;
    let padded = dataset
        .iter()
        .map(|(x, y)| {
            if x.cols() != spec.input_dim {
                return Err(Error::Dimension {
                    context: "training sequence feature dimension".into(),
                    expected: spec.input_dim,
                    actual: x.cols(),
                });
            }
            Ok((x.pad_rows(spec.max_height()), *y))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut model = CnnModel::new(spec.clone(), cfg.seed)?;
    let log = super::fit_sgd(&mut model, &padded, cfg, spec.dropout_rate > 0.0)?;
    Ok((model, log))
}
