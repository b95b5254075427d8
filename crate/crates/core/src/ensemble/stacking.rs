use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::external::PredictionSet;
use crate::error::{invalid, Error, Result};
use crate::harness::{FoldPlan, Standardizer};
use crate::ingest::Label;
use crate::nn::{logistic_fit, LogisticModel};

/// Speaker-level features for one internal stage-1 logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalBase {
    pub model_id: String,
    pub features: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackConfig {
    /// L2 strength of every logistic regression in both stages.
    pub l2: f64,
    pub seed: u64,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig { l2: 1e-2, seed: 0 }
    }
}

/// One internal base model fitted with one fold held out.
#[derive(Debug, Clone)]
pub struct Stage1Instance {
    pub held_out_fold: usize,
    pub trained_on: Arc<BTreeSet<String>>,
    pub standardizer: Standardizer,
    pub model: LogisticModel,
}

/// Where one stage-2 feature block came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Predicted by an internal instance trained on these speakers.
    Internal { trained_on: Arc<BTreeSet<String>> },
    /// Averaged from external predictions carrying these fold tags.
    External { folds: Vec<Option<usize>> },
}

type Stage2Column = BTreeMap<String, ([f64; 2], Provenance)>;

/// One stage-2 training row: a speaker, its meta features and, per base
/// model, where that model's block came from.
#[derive(Debug, Clone)]
pub struct MetaRow {
    pub speaker_id: String,
    pub label: Label,
    pub features: Vec<f64>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone)]
pub struct StackModel {
    /// Base model ids in meta-feature order (internal first, then external).
    pub base_models: Vec<String>,
    pub internal: BTreeMap<String, Vec<Stage1Instance>>,
    pub external: Vec<String>,
    pub rows: Vec<MetaRow>,
    pub meta: LogisticModel,
}

impl StackModel {
    pub fn meta_dim(&self) -> usize {
        2 * self.base_models.len()
    }
}

fn stage1_fit(
    base: &InternalBase,
    plan: &FoldPlan,
    labels: &BTreeMap<String, Label>,
    cfg: &StackConfig,
) -> Result<(Vec<Stage1Instance>, Stage2Column)> {
    let mut instances = Vec::new();
    let mut oof = BTreeMap::new();
    for fold in plan.folds() {
        let train: BTreeSet<String> = plan.train_speakers(fold).into_iter().collect();
        let rows =
            |speakers: &mut dyn Iterator<Item = &String>| -> Result<Vec<(String, Vec<f64>)>> {
                speakers
                    .map(|s| {
                        let f = base.features.get(s).ok_or_else(|| {
                            invalid!("{} has no features for speaker {s}", base.model_id)
                        })?;
                        Ok((s.clone(), f.clone()))
                    })
                    .collect()
            };
        let train_rows = rows(&mut train.iter())?;
        let standardizer = Standardizer::fit(train_rows.iter().map(|(_, f)| f.as_slice()))?;
        let data: Vec<(Vec<f64>, Label)> = train_rows
            .iter()
            .map(|(s, f)| (standardizer.apply(f), labels[s]))
            .collect();
        let (model, _) =
            logistic_fit(&data, cfg.l2, cfg.seed ^ fold as u64).map_err(|e| e.in_fold(fold))?;
        let trained_on = Arc::new(train);
        for (s, f) in rows(&mut plan.test_speakers(fold).iter())? {
            let p = model.predict(&standardizer.apply(&f))?;
            oof.insert(
                s,
                (
                    p,
                    Provenance::Internal {
                        trained_on: Arc::clone(&trained_on),
                    },
                ),
            );
        }
        instances.push(Stage1Instance {
            held_out_fold: fold,
            trained_on,
            standardizer,
            model,
        });
    }
    Ok((instances, oof))
}

fn mean_probs(ps: impl Iterator<Item = [f64; 2]>) -> Option<[f64; 2]> {
    let mut n = 0usize;
    let mut acc = [0.0; 2];
    for p in ps {
        acc[0] += p[0];
        acc[1] += p[1];
        n += 1;
    }
    (n > 0).then(|| acc.map(|v| v / n as f64))
}

/// Two-stage stacking. Stage 1 produces an out-of-fold probability vector
/// per speaker from every base model: internal logistic regressions are
/// refitted with each fold of `plan` held out, and external predictions
/// must carry the fold tag `plan` gives the speaker. Stage 2 fits a
/// logistic regression on the concatenated vectors of all speakers.
pub fn stack_fit(
    internal: &[InternalBase],
    external: &PredictionSet,
    external_models: &[String],
    labels: &BTreeMap<String, Label>,
    plan: &FoldPlan,
    cfg: &StackConfig,
) -> Result<StackModel> {
    if internal.is_empty() && external_models.is_empty() {
        return Err(Error::Config(
            "stacking needs at least one base model".into(),
        ));
    }
    let speakers: Vec<String> = plan.assignments.keys().cloned().collect();
    if let Some(s) = speakers.iter().find(|s| !labels.contains_key(*s)) {
        return Err(invalid!("speaker {s} in fold plan has no label"));
    }

    let mut blocks: Vec<Stage2Column> = Vec::new();
    let mut stage1 = BTreeMap::new();
    let mut base_models = Vec::new();
    for base in internal {
        let (instances, oof) = stage1_fit(base, plan, labels, cfg)?;
        stage1.insert(base.model_id.clone(), instances);
        blocks.push(oof);
        base_models.push(base.model_id.clone());
    }
    for m in external_models {
        let mut block = BTreeMap::new();
        let mut missing = Vec::new();
        for s in &speakers {
            let preds: Vec<_> = external
                .for_model(m)
                .filter(|p| &p.speaker_id == s)
                .collect();
            let fold = plan.fold_of(s);
            if preds.is_empty() {
                missing.push(s.as_str());
                continue;
            }
            if let Some(p) = preds.iter().find(|p| p.fold.is_none() || p.fold != fold) {
                return Err(invalid!(
                    "{m} prediction for speaker {s} (instance {}) has fold {:?} but the plan puts the speaker in fold {:?}; it is not out-of-fold",
                    p.instance_id,
                    p.fold,
                    fold
                ));
            }
            let mean = mean_probs(preds.iter().map(|p| p.probs)).expect("non-empty");
            let folds = preds.iter().map(|p| p.fold).collect();
            block.insert(s.clone(), (mean, Provenance::External { folds }));
        }
        if !missing.is_empty() {
            return Err(invalid!(
                "{m} has no out-of-fold prediction for speakers: {}",
                missing.join(", ")
            ));
        }
        blocks.push(block);
        base_models.push(m.clone());
    }

    let rows: Vec<MetaRow> = speakers
        .iter()
        .map(|s| {
            let mut features = Vec::with_capacity(2 * blocks.len());
            let mut provenance = Vec::with_capacity(blocks.len());
            for (block, name) in blocks.iter().zip(&base_models) {
                let (p, prov) = block
                    .get(s)
                    .ok_or_else(|| invalid!("{name} produced no out-of-fold prediction for {s}"))?;
                features.extend_from_slice(p);
                provenance.push(prov.clone());
            }
            Ok(MetaRow {
                speaker_id: s.clone(),
                label: labels[s],
                features,
                provenance,
            })
        })
        .collect::<Result<_>>()?;
    let data: Vec<(Vec<f64>, Label)> = rows.iter().map(|r| (r.features.clone(), r.label)).collect();
    let (meta, _) = logistic_fit(&data, cfg.l2, cfg.seed)?;
    Ok(StackModel {
        base_models,
        internal: stage1,
        external: external_models.to_vec(),
        rows,
        meta,
    })
}

/// Result of checking every stage-2 row against the fold plan.
#[derive(Debug, Clone, PartialEq)]
pub struct StackAudit {
    pub rows: usize,
    /// `(speaker, base model)` blocks produced by a model that saw the
    /// speaker in training.
    pub contaminated: Vec<(String, String)>,
}

/// Recomputes, from the recorded provenance alone, whether any stage-2 row
/// came from a stage-1 model that was trained on that row's speaker.
pub fn audit_stack(model: &StackModel, plan: &FoldPlan) -> StackAudit {
    let mut contaminated = Vec::new();
    for row in &model.rows {
        for (prov, name) in row.provenance.iter().zip(&model.base_models) {
            let bad = match prov {
                Provenance::Internal { trained_on } => trained_on.contains(&row.speaker_id),
                Provenance::External { folds } => {
                    let own = plan.fold_of(&row.speaker_id);
                    // an external model tagged with fold f was trained on
                    // every speaker outside fold f
                    folds.iter().any(|f| f.is_none() || *f != own)
                }
            };
            if bad {
                contaminated.push((row.speaker_id.clone(), name.clone()));
            }
        }
    }
    StackAudit {
        rows: model.rows.len(),
        contaminated,
    }
}

/// Meta features for new speakers: each internal model's fold instances
/// and each external model's instances are averaged, then the meta model
/// predicts `[p_cn, p_ad]`.
pub fn stack_predict(
    model: &StackModel,
    internal: &[InternalBase],
    external: &PredictionSet,
    speakers: &[String],
) -> Result<BTreeMap<String, [f64; 2]>> {
    let mut out = BTreeMap::new();
    for s in speakers {
        let features = stack_features(model, internal, external, s)?;
        out.insert(s.clone(), model.meta.predict(&features)?);
    }
    Ok(out)
}

/// The concatenated averaged base-model vectors for one speaker.
pub fn stack_features(
    model: &StackModel,
    internal: &[InternalBase],
    external: &PredictionSet,
    speaker: &str,
) -> Result<Vec<f64>> {
    let mut features = Vec::with_capacity(model.meta_dim());
    for (id, instances) in model
        .base_models
        .iter()
        .filter_map(|id| model.internal.get(id).map(|i| (id, i)))
    {
        let base = internal
            .iter()
            .find(|b| &b.model_id == id)
            .ok_or_else(|| invalid!("no features supplied for internal model {id}"))?;
        let x = base
            .features
            .get(speaker)
            .ok_or_else(|| invalid!("{id} has no features for speaker {speaker}"))?;
        let probs = instances
            .iter()
            .map(|i| i.model.predict(&i.standardizer.apply(x)))
            .collect::<Result<Vec<_>>>()?;
        let mean = mean_probs(probs.into_iter())
            .ok_or_else(|| invalid!("internal model {id} has no stage-1 instances"))?;
        features.extend_from_slice(&mean);
    }
    for m in &model.external {
        let mean = mean_probs(
            external
                .for_model(m)
                .filter(|p| p.speaker_id == speaker)
                .map(|p| p.probs),
        )
        .ok_or_else(|| invalid!("{m} has no prediction for speaker {speaker}"))?;
        features.extend_from_slice(&mean);
    }
    Ok(features)
}
