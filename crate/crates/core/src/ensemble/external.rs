use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const SIMPLEX_TOL: f64 = 1e-6;

/// One model instance's `[p_cn, p_ad]` for one speaker. `fold` is set when
/// the prediction is out-of-fold with respect to the shared fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionVector {
    pub speaker_id: String,
    pub model_id: String,
    pub instance_id: u32,
    pub fold: Option<usize>,
    pub probs: [f64; 2],
}

impl PredictionVector {
    pub fn check(&self) -> Result<()> {
        let [a, b] = self.probs;
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
            return Err(invalid!(
                "probs {:?} must be finite and non-negative",
                self.probs
            ));
        }
        if ((a + b) - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid!("probs {:?} sum to {}, not 1", self.probs, a + b));
        }
        Ok(())
    }
}

/// Fixed-length encoder output for one speaker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalEmbedding {
    pub speaker_id: String,
    pub model_id: String,
    pub vector: Vec<f64>,
}

fn json_lines<T: for<'de> Deserialize<'de>>(
    bytes: &[u8],
    source: &str,
    mut each: impl FnMut(usize, T) -> Result<()>,
) -> Result<()> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(source, format!("byte {}", e.valid_up_to()), "not UTF-8"))?;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(line)
            .map_err(|e| Error::parse(source, format!("line {n}"), e.to_string()))?;
        each(n, rec)?;
    }
    Ok(())
}

/// Validated predictions keyed by `(model_id, instance_id, speaker_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    records: BTreeMap<(String, u32, String), PredictionVector>,
}

/// Votes per speaker, in instance order.
pub type VoteTable = BTreeMap<String, Vec<[f64; 2]>>;

impl PredictionSet {
    pub fn insert(&mut self, p: PredictionVector) -> Result<()> {
        p.check()?;
        let key = (p.model_id.clone(), p.instance_id, p.speaker_id.clone());
        if self.records.contains_key(&key) {
            return Err(invalid!(
                "duplicate prediction for model {}, instance {}, speaker {}",
                key.0,
                key.1,
                key.2
            ));
        }
        self.records.insert(key, p);
        Ok(())
    }

    pub fn extend(&mut self, other: PredictionSet) -> Result<()> {
        other.records.into_values().try_for_each(|p| self.insert(p))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredictionVector> {
        self.records.values()
    }

    pub fn models(&self) -> Vec<String> {
        let mut m: Vec<String> = self.records.keys().map(|k| k.0.clone()).collect();
        m.dedup();
        m
    }

    pub fn for_model<'a>(
        &'a self,
        model: &'a str,
    ) -> impl Iterator<Item = &'a PredictionVector> + 'a {
        self.records.values().filter(move |p| p.model_id == model)
    }

    /// All of a model's predictions grouped by speaker.
    pub fn vote_table(&self, model: &str) -> VoteTable {
        let mut t = VoteTable::new();
        for p in self.for_model(model) {
            t.entry(p.speaker_id.clone()).or_default().push(p.probs);
        }
        t
    }

    pub fn to_jsonl(&self) -> String {
        self.records
            .values()
            .map(|p| serde_json::to_string(p).expect("prediction serializes") + "\n")
            .collect()
    }
}

/// Reads predictions JSONL. Each line is checked against the simplex and
/// the `(model_id, instance_id, speaker_id)` key must be unique.
pub fn read_predictions(bytes: &[u8]) -> Result<PredictionSet> {
    let mut set = PredictionSet::default();
    json_lines(bytes, "predictions", |n, p: PredictionVector| {
        set.insert(p)
            .map_err(|e| invalid!("predictions line {n}: {}", strip(e)))
    })?;
    Ok(set)
}

/// Encoder vectors indexed by model then speaker.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingSet {
    vectors: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl EmbeddingSet {
    pub fn insert(&mut self, e: ExternalEmbedding) -> Result<()> {
        if e.vector.is_empty() {
            return Err(invalid!("empty embedding for speaker {}", e.speaker_id));
        }
        if e.vector.iter().any(|v| !v.is_finite()) {
            return Err(invalid!(
                "non-finite embedding entry for speaker {}",
                e.speaker_id
            ));
        }
        let per_model = self.vectors.entry(e.model_id.clone()).or_default();
        if let Some(dim) = per_model.values().next().map(Vec::len) {
            if dim != e.vector.len() {
                return Err(Error::Dimension {
                    context: format!(
                        "embedding of model {} for speaker {}",
                        e.model_id, e.speaker_id
                    ),
                    expected: dim,
                    actual: e.vector.len(),
                });
            }
        }
        if per_model.contains_key(&e.speaker_id) {
            return Err(invalid!(
                "duplicate embedding for model {}, speaker {}",
                e.model_id,
                e.speaker_id
            ));
        }
        per_model.insert(e.speaker_id, e.vector);
        Ok(())
    }

    pub fn models(&self) -> Vec<String> {
        self.vectors.keys().cloned().collect()
    }

    pub fn dim(&self, model: &str) -> Option<usize> {
        self.vectors.get(model)?.values().next().map(Vec::len)
    }

    pub fn get(&self, model: &str, speaker: &str) -> Option<&[f64]> {
        self.vectors.get(model)?.get(speaker).map(Vec::as_slice)
    }

    /// Like [`get`](Self::get) but a missing entry is a validation error.
    pub fn require(&self, model: &str, speaker: &str) -> Result<&[f64]> {
        self.get(model, speaker)
            .ok_or_else(|| invalid!("no {model} embedding for speaker {speaker}"))
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for (model, speakers) in &self.vectors {
            for (speaker, v) in speakers {
                let e = ExternalEmbedding {
                    speaker_id: speaker.clone(),
                    model_id: model.clone(),
                    vector: v.clone(),
                };
                s.push_str(&serde_json::to_string(&e).expect("embedding serializes"));
                s.push('\n');
            }
        }
        s
    }
}

pub fn read_embeddings(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut set = EmbeddingSet::default();
    json_lines(bytes, "embeddings", |n, e: ExternalEmbedding| {
        set.insert(e)
            .map_err(|e| invalid!("embeddings line {n}: {}", strip(e)))
    })?;
    Ok(set)
}

/// Either kind of external file, read from disk.
pub fn read_external_file<T>(path: &Path, read: impl Fn(&[u8]) -> Result<T>) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read(&bytes).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn strip(e: Error) -> String {
    match e {
        Error::Validation(m) => m,
        other => other.to_string(),
    }
}
