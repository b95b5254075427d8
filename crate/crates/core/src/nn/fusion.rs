use super::cnn::{
    banks, conv_backward, conv_forward_cached, conv_signature, init_conv, log_softmax_ce,
    FilterBankRef,
};
use super::{
    check_labels, dropout_mask, glorot, softmax, CnnSpec, Differentiable, Matrix, ParamSet,
    TrainConfig, TrainingLog,
};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::rng::{self, ChaCha8Rng};

/// Width of the fully connected layer on top of the concatenated features.
pub const FUSION_HIDDEN_UNITS: usize = 64;

/// One fusion sample: a feature contour plus a fixed-length embedding of
/// the same session.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    pub sequence: Matrix,
    pub embedding: Vec<f64>,
}

/// CNN branch over the contour, concatenated with the embedding, then a
/// ReLU hidden layer and a softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    spec: CnnSpec,
    embedding_dim: usize,
    params: ParamSet,
}

struct Forward {
    conv: super::cnn::ConvOut,
    mask: Vec<f64>,
    joint: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

impl FusionModel {
    pub fn new(spec: CnnSpec, embedding_dim: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        if embedding_dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut rng = rng::derive(seed, 0);
        let mut params = ParamSet::default();
        init_conv(&mut params, &spec, Some(&mut rng));
        let joint = spec.pooled_dim() + embedding_dim;
        let (h, c) = (FUSION_HIDDEN_UNITS, spec.output_classes);
        params.push(
            "hidden.weight",
            vec![h, joint],
            glorot(&mut rng, h * joint, joint, h),
        );
        params.push_zeros("hidden.bias", vec![h]);
        params.push("out.weight", vec![c, h], glorot(&mut rng, c * h, h, c));
        params.push_zeros("out.bias", vec![c]);
        Ok(FusionModel {
            spec,
            embedding_dim,
            params,
        })
    }

    pub fn from_params(spec: CnnSpec, embedding_dim: usize, params: ParamSet) -> Result<Self> {
        let template = FusionModel::new(spec, embedding_dim, 0)?;
        if !template.params.same_layout(&params) {
            return Err(Error::Validation(
                "parameter layout does not match fusion spec".into(),
            ));
        }
        Ok(FusionModel { params, ..template })
    }

    pub fn spec(&self) -> &CnnSpec {
        &self.spec
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn joint_dim(&self) -> usize {
        self.spec.pooled_dim() + self.embedding_dim
    }

    fn banks(&self) -> Vec<FilterBankRef<'_>> {
        banks(&self.spec, &self.params)
    }

    fn base(&self) -> usize {
        2 * self.spec.filter_heights.len()
    }

    fn check_input(&self, x: &FusionInput) -> Result<()> {
        if x.embedding.len() != self.embedding_dim {
            return Err(Error::Dimension {
                context: "embedding dimension".into(),
                expected: self.embedding_dim,
                actual: x.embedding.len(),
            });
        }
        if x.sequence.cols() != self.spec.input_dim {
            return Err(Error::Dimension {
                context: "contour feature dimension".into(),
                expected: self.spec.input_dim,
                actual: x.sequence.cols(),
            });
        }
        Ok(())
    }

    fn run(&self, seq: &Matrix, emb: &[f64], dropout: Option<&mut ChaCha8Rng>) -> Result<Forward> {
        let conv = conv_forward_cached(seq, &self.banks())?;
        let mut joint = conv.pooled.clone();
        joint.extend_from_slice(emb);
        // Dropout sits on the pooled CNN features, as in the plain CNN; the
        // frozen embedding passes through unchanged.
        let mut mask = match dropout {
            Some(rng) => dropout_mask(rng, conv.pooled.len(), self.spec.dropout_rate),
            None => vec![1.0; conv.pooled.len()],
        };
        mask.resize(joint.len(), 1.0);
        joint.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
        let b = self.base();
        let n = joint.len();
        let (hw, hb) = (self.params.array(b), self.params.array(b + 1));
        let hidden: Vec<f64> = (0..FUSION_HIDDEN_UNITS)
            .map(|k| {
                let z = hb[k]
                    + hw[k * n..(k + 1) * n]
                        .iter()
                        .zip(&joint)
                        .map(|(a, x)| a * x)
                        .sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let (ow, ob) = (self.params.array(b + 2), self.params.array(b + 3));
        let h = FUSION_HIDDEN_UNITS;
        let logits = (0..self.spec.output_classes)
            .map(|c| {
                ob[c]
                    + ow[c * h..(c + 1) * h]
                        .iter()
                        .zip(&hidden)
                        .map(|(a, x)| a * x)
                        .sum::<f64>()
            })
            .collect();
        Ok(Forward {
            conv,
            mask,
            joint,
            hidden,
            logits,
        })
    }

    /// Class probabilities; dropout only when `train_rng` is set.
    pub fn forward(&self, x: &FusionInput, train_rng: Option<&mut ChaCha8Rng>) -> Result<Vec<f64>> {
        self.check_input(x)?;
        if !self.params.all_finite() {
            return Err(Error::Numeric(
                "fusion model has non-finite parameters".into(),
            ));
        }
        Ok(softmax(
            &self.run(&x.sequence, &x.embedding, train_rng)?.logits,
        ))
    }

    /// Evaluation-mode `[p_cn, p_ad]` with tail padding of short contours.
    pub fn predict(&self, x: &FusionInput) -> Result<[f64; 2]> {
        if self.spec.output_classes != 2 {
            return Err(Error::Config(
                "binary prediction needs output_classes = 2".into(),
            ));
        }
        let padded = FusionInput {
            sequence: x.sequence.pad_rows(self.spec.max_height()),
            embedding: x.embedding.clone(),
        };
        let p = self.forward(&padded, None)?;
        Ok([p[0], p[1]])
    }
}

impl Differentiable for FusionModel {
    type Input = FusionInput;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn ce_and_grad(
        &self,
        x: &FusionInput,
        y: Label,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> (f64, ParamSet) {
        let seq = x.sequence.pad_rows(self.spec.max_height());
        let f = self
            .run(&seq, &x.embedding, dropout)
            .expect("input validated by caller");
        let ce = log_softmax_ce(&f.logits, y.index());
        let mut dz = softmax(&f.logits);
        dz[y.index()] -= 1.0;

        let mut grads = self.params.zeros_like();
        let b = self.base();
        let h = FUSION_HIDDEN_UNITS;
        let n = f.joint.len();

        let ow = self.params.array(b + 2);
        let mut dhidden = vec![0.0; h];
        {
            let g = grads.array_mut(b + 2);
            for (c, &d) in dz.iter().enumerate() {
                for k in 0..h {
                    g[c * h + k] += d * f.hidden[k];
                    dhidden[k] += ow[c * h + k] * d;
                }
            }
        }
        grads
            .array_mut(b + 3)
            .iter_mut()
            .zip(&dz)
            .for_each(|(g, d)| *g += d);
        for (d, &a) in dhidden.iter_mut().zip(&f.hidden) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }

        let hw = self.params.array(b);
        let mut djoint = vec![0.0; n];
        {
            let g = grads.array_mut(b);
            for (k, &d) in dhidden.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for j in 0..n {
                    g[k * n + j] += d * f.joint[j];
                    djoint[j] += hw[k * n + j] * d;
                }
            }
        }
        grads
            .array_mut(b + 1)
            .iter_mut()
            .zip(&dhidden)
            .for_each(|(g, d)| *g += d);
        djoint.iter_mut().zip(&f.mask).for_each(|(d, m)| *d *= m);

        let p = self.spec.pooled_dim();
        conv_backward(
            &seq,
            &self.spec.filter_heights,
            self.spec.filters_per_height,
            &f.conv,
            &djoint[..p],
            &mut grads,
        );
        (ce, grads)
    }

    fn kink_signature(&self, x: &FusionInput) -> Vec<u64> {
        let seq = x.sequence.pad_rows(self.spec.max_height());
        let f = self
            .run(&seq, &x.embedding, None)
            .expect("input validated by caller");
        conv_signature(&f.conv)
            .chain(f.hidden.iter().map(|&a| u64::from(a > 0.0)))
            .collect()
    }
}

/// Trains a fusion model by momentum SGD.
pub fn fusion_fit(
    dataset: &[(FusionInput, Label)],
    spec: &CnnSpec,
    embedding_dim: usize,
    cfg: &TrainConfig,
) -> Result<(FusionModel, TrainingLog)> {
    spec.validate()?;
    cfg.validate()?;
    check_labels(dataset.iter().map(|(_, y)| *y), 2)?;
    let mut model = FusionModel::new(spec.clone(), embedding_dim, cfg.seed)?;
    let padded = dataset
        .iter()
        .map(|(x, y)| {
            model.check_input(x)?;
            Ok((
                FusionInput {
                    sequence: x.sequence.pad_rows(spec.max_height()),
                    embedding: x.embedding.clone(),
                },
                *y,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let log = super::fit_sgd(&mut model, &padded, cfg, spec.dropout_rate > 0.0)?;
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn input(d: usize, e: usize) -> FusionInput {
        FusionInput {
            sequence: Matrix::new(5, d, (0..5 * d).map(|i| (i as f64 * 0.37).sin()).collect())
                .unwrap(),
            embedding: (0..e).map(|i| (i as f64 * 0.11).cos()).collect(),
        }
    }

    #[test]
    fn geometry() {
        let m = FusionModel::new(CnnSpec::with_input_dim(4), 768, 0).unwrap();
        assert_eq!(m.joint_dim(), 792);
    }

    #[test]
    fn embedding_mismatch_is_dimension_error() {
        let m = FusionModel::new(CnnSpec::with_input_dim(4), 6, 0).unwrap();
        let mut x = input(4, 6);
        x.embedding.pop();
        assert!(matches!(m.forward(&x, None), Err(Error::Dimension { .. })));
    }

    #[test]
    fn probabilities_normalized() {
        let m = FusionModel::new(CnnSpec::with_input_dim(4), 6, 3).unwrap();
        let p = m.predict(&input(4, 6)).unwrap();
        assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
    }
}
