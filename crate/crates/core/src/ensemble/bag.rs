use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::external::VoteTable;
use super::vote::{majority_vote, VoteOutcome};
use crate::error::{invalid, Error, Result};
use crate::ingest::Label;
use crate::nn::{
    cnn_fit, fusion_fit, CnnModel, CnnSpec, FusionInput, FusionModel, Matrix, TrainConfig,
};

/// Number of independently seeded instances; instance `i` uses seed
/// `base_seed ^ i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BagSpec {
    pub n_instances: usize,
    pub base_seed: u64,
}

impl Default for BagSpec {
    fn default() -> Self {
        BagSpec {
            n_instances: 50,
            base_seed: 0,
        }
    }
}

impl BagSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(Error::Config("a bag needs at least one instance".into()));
        }
        Ok(())
    }

    pub fn instance_seed(&self, i: usize) -> u64 {
        self.base_seed ^ i as u64
    }
}

/// Runs `fit(seed)` once per instance, in parallel on the current rayon
/// pool. Results come back in instance order; the first failing instance
/// (by index) is reported.
pub fn train_bag<T: Send>(bag: &BagSpec, fit: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    bag.validate()?;
    let results: Vec<Result<T>> = (0..bag.n_instances)
        .into_par_iter()
        .map(|i| fit(bag.instance_seed(i)))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::InInstance {
                instance: i,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CnnBag {
    pub models: Vec<CnnModel>,
}

pub fn cnn_bag_fit(
    dataset: &[(Matrix, Label)],
    spec: &CnnSpec,
    cfg: &TrainConfig,
    bag: &BagSpec,
) -> Result<CnnBag> {
    let models = train_bag(bag, |seed| {
        cnn_fit(dataset, spec, &cfg.with_seed(seed)).map(|(m, _)| m)
    })?;
    Ok(CnnBag { models })
}

impl CnnBag {
    /// Every instance's probabilities for every speaker.
    pub fn votes(&self, inputs: &BTreeMap<String, Matrix>) -> Result<VoteTable> {
        inputs
            .iter()
            .map(|(s, x)| {
                let v = self
                    .models
                    .iter()
                    .map(|m| m.predict(x))
                    .collect::<Result<Vec<_>>>()?;
                Ok((s.clone(), v))
            })
            .collect()
    }
}

/// Fusion models trained with one embedding per speaker held fixed.
#[derive(Debug, Clone)]
pub struct FusionBag {
    pub models: Vec<FusionModel>,
}

/// Trains the fusion bag. The embedding is an input, never updated.
pub fn model_b_fit(
    dataset: &[(FusionInput, Label)],
    spec: &CnnSpec,
    embedding_dim: usize,
    cfg: &TrainConfig,
    bag: &BagSpec,
) -> Result<FusionBag> {
    let models = train_bag(bag, |seed| {
        fusion_fit(dataset, spec, embedding_dim, &cfg.with_seed(seed)).map(|(m, _)| m)
    })?;
    Ok(FusionBag { models })
}

impl FusionBag {
    pub fn votes(&self, inputs: &BTreeMap<String, FusionInput>) -> Result<VoteTable> {
        inputs
            .iter()
            .map(|(s, x)| {
                let v = self
                    .models
                    .iter()
                    .map(|m| m.predict(x))
                    .collect::<Result<Vec<_>>>()?;
                Ok((s.clone(), v))
            })
            .collect()
    }

    pub fn predict(
        &self,
        inputs: &BTreeMap<String, FusionInput>,
    ) -> Result<BTreeMap<String, VoteOutcome>> {
        majority_vote(&self.votes(inputs)?)
    }
}

/// Pools several vote sources with equal weight per instance and takes the
/// majority for each of `speakers`. Every source must cover every speaker.
pub fn pool_votes(
    speakers: &[String],
    sources: &[(&str, &VoteTable)],
) -> Result<BTreeMap<String, VoteOutcome>> {
    let mut problems = Vec::new();
    for (name, table) in sources {
        let missing: Vec<&str> = speakers
            .iter()
            .filter(|s| table.get(*s).is_none_or(Vec::is_empty))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            problems.push(format!("{name} has no votes for {}", missing.join(", ")));
        }
    }
    if !problems.is_empty() {
        return Err(invalid!("{}", problems.join("; ")));
    }
    let wanted: BTreeSet<&String> = speakers.iter().collect();
    let mut pooled = VoteTable::new();
    for s in wanted {
        let entry = pooled.entry(s.clone()).or_default();
        for (_, table) in sources {
            entry.extend_from_slice(&table[s]);
        }
    }
    majority_vote(&pooled)
}

/// CNN bag votes pooled with an external model's instance votes.
pub fn model_a_predict(
    cnn_votes: &VoteTable,
    external_votes: &VoteTable,
    speakers: &[String],
) -> Result<BTreeMap<String, VoteOutcome>> {
    pool_votes(
        speakers,
        &[("cnn", cnn_votes), ("external", external_votes)],
    )
}
