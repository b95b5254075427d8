use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ingest::Label;
use crate::rng;

/// Seeded stratified assignment of speakers to `k` folds.
///
/// Serialized as `{"k": 5, "seed": 7, "assignments": {"S001": 3, ...}}`;
/// the same file is shared with producers of external predictions so their
/// out-of-fold tags agree with ours.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

/// Within each class: sort ids, shuffle with the seed, deal round-robin.
/// The dealing position carries over from one class to the next so fold
/// sizes stay balanced overall, not only per class.
pub fn make_folds(labels: &BTreeMap<String, Label>, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    let mut assignments = BTreeMap::new();
    let mut next = 0usize;
    for class in Label::ALL {
        let mut ids: Vec<&String> = labels
            .iter()
            .filter(|(_, &l)| l == class)
            .map(|(s, _)| s)
            .collect();
        if ids.len() < k {
            return Err(invalid!(
                "class {class} has {} speakers, fewer than k = {k}",
                ids.len()
            ));
        }
        ids.shuffle(&mut rng::derive(seed, class.index() as u64));
        for id in ids {
            assignments.insert(id.clone(), next % k);
            next += 1;
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}

impl FoldPlan {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(invalid!("fold plan k must be at least 2, got {}", self.k));
        }
        if let Some((s, f)) = self.assignments.iter().find(|(_, &f)| f >= self.k) {
            return Err(invalid!(
                "speaker {s} assigned to fold {f}, but k = {}",
                self.k
            ));
        }
        Ok(())
    }

    pub fn fold_of(&self, speaker: &str) -> Option<usize> {
        self.assignments.get(speaker).copied()
    }

    /// Fold indices that have at least one speaker, ascending.
    pub fn folds(&self) -> Vec<usize> {
        self.assignments
            .values()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn test_speakers(&self, fold: usize) -> Vec<String> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn train_speakers(&self, fold: usize) -> Vec<String> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(s, _)| s.clone())
            .collect()
    }

    /// The same assignment limited to `speakers`; fold indices are kept, so
    /// some folds may be empty.
    pub fn restrict<'a>(&self, speakers: impl IntoIterator<Item = &'a String>) -> FoldPlan {
        let assignments = speakers
            .into_iter()
            .filter_map(|s| self.assignments.get(s).map(|&f| (s.clone(), f)))
            .collect();
        FoldPlan {
            k: self.k,
            seed: self.seed,
            assignments,
        }
    }

    /// Errors unless exactly `speakers` are assigned.
    pub fn check_covers<'a>(&self, speakers: impl IntoIterator<Item = &'a String>) -> Result<()> {
        let wanted: BTreeSet<&String> = speakers.into_iter().collect();
        let missing: Vec<&str> = wanted
            .iter()
            .filter(|s| !self.assignments.contains_key(s.as_str()))
            .map(|s| s.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(invalid!(
                "fold plan has no fold for speakers: {}",
                missing.join(", ")
            ));
        }
        let extra: Vec<&str> = self
            .assignments
            .keys()
            .filter(|s| !wanted.contains(s))
            .map(String::as_str)
            .collect();
        if !extra.is_empty() {
            return Err(invalid!(
                "fold plan lists unknown speakers: {}",
                extra.join(", ")
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fold plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let plan: FoldPlan = serde_json::from_slice(bytes)
            .map_err(|e| Error::parse("fold plan", format!("line {}", e.line()), e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        FoldPlan::from_json(&bytes)
    }
}
