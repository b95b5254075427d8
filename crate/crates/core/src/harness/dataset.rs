use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contours::{contour, windows, FeatureContour, Registry, WindowConfig};
use crate::disfluency::{disfluency_vector, DisfluencyVector, PauseConfig};
use crate::error::{invalid, Error, Result};
use crate::ingest::{
    load_labels, load_syllable_lexicon, parse_asr_session, parse_conllu, Label, Sentence,
    SessionRecord, SyllableLexicon,
};

/// Where a dataset lives. `root` is resolved against the directory of the
/// config file; the other entries are relative to `root`.
///
/// Layout: `sessions/<id>.json`, `transcripts/<id>.conllu`, `labels.csv`,
/// optionally `segmentation/<id>.csv`, a pronouncing dictionary and a
/// measure registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub root: PathBuf,
    pub sessions: PathBuf,
    pub transcripts: PathBuf,
    pub labels: PathBuf,
    pub segmentation: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub registry: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            root: PathBuf::from("."),
            sessions: PathBuf::from("sessions"),
            transcripts: PathBuf::from("transcripts"),
            labels: PathBuf::from("labels.csv"),
            segmentation: None,
            lexicon: None,
            registry: None,
        }
    }
}

pub struct SpeakerData {
    pub session: SessionRecord,
    pub sentences: Vec<Sentence>,
    pub label: Label,
}

pub struct Dataset {
    pub speakers: BTreeMap<String, SpeakerData>,
    pub lexicon: SyllableLexicon,
    pub registry: Registry,
    /// SHA-256 over every input file's relative path and bytes.
    pub fingerprint: String,
}

impl Dataset {
    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.speakers
            .iter()
            .map(|(s, d)| (s.clone(), d.label))
            .collect()
    }
}

struct Reader {
    root: PathBuf,
    hasher: Sha256,
}

impl Reader {
    fn read(&mut self, rel: &Path) -> Result<Vec<u8>> {
        let full = self.root.join(rel);
        let bytes = std::fs::read(&full).map_err(|e| Error::io(&full, e))?;
        let name = rel.to_string_lossy().replace('\\', "/");
        self.hasher.update((name.len() as u64).to_le_bytes());
        self.hasher.update(name.as_bytes());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(&bytes);
        Ok(bytes)
    }

    fn list(&self, rel: &Path, ext: &str) -> Result<Vec<PathBuf>> {
        let full = self.root.join(rel);
        let entries = std::fs::read_dir(&full).map_err(|e| Error::io(&full, e))?;
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&full, e))?;
            let p = entry.path();
            if p.extension().and_then(|e| e.to_str()) == Some(ext) {
                out.push(rel.join(entry.file_name()));
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Files a registry refers to, so they count towards the fingerprint.
fn registry_resources(json: &[u8]) -> Vec<String> {
    let Ok(v) = serde_json::from_slice::<serde_json::Value>(json) else {
        return Vec::new();
    };
    v.get("measures")
        .and_then(|m| m.as_array())
        .into_iter()
        .flatten()
        .filter_map(|e| e.get("wordlist").or_else(|| e.get("table")))
        .filter_map(|p| p.as_str().map(str::to_string))
        .collect()
}

fn with_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_dataset(cfg: &DatasetConfig, base_dir: &Path) -> Result<Dataset> {
    let mut r = Reader {
        root: base_dir.join(&cfg.root),
        hasher: Sha256::new(),
    };
    let labels = with_file(&cfg.labels, load_labels(&r.read(&cfg.labels)?))?;
    let lexicon = match &cfg.lexicon {
        Some(p) => with_file(p, load_syllable_lexicon(&r.read(p)?))?,
        None => SyllableLexicon::default(),
    };
    let registry = match &cfg.registry {
        Some(p) => {
            let json = r.read(p)?;
            let dir = p.parent().unwrap_or(Path::new("")).to_path_buf();
            for resource in registry_resources(&json) {
                r.read(&dir.join(resource))?;
            }
            Registry::from_json(&json, &r.root.join(&dir))?
        }
        None => Registry::builtin(),
    };

    let mut speakers = BTreeMap::new();
    for path in r.list(&cfg.sessions, "json")? {
        let json = r.read(&path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let seg = match &cfg.segmentation {
            Some(dir) => {
                let p = dir.join(format!("{stem}.csv"));
                if r.root.join(&p).exists() {
                    Some(r.read(&p)?)
                } else {
                    None
                }
            }
            None => None,
        };
        let session = with_file(&path, parse_asr_session(&json, seg.as_deref()))?;
        let id = session.speaker_id.clone();
        let label = *labels.get(&id).ok_or_else(|| {
            invalid!(
                "{}: speaker {id} is not in {}",
                path.display(),
                cfg.labels.display()
            )
        })?;
        if let Some(own) = session.label {
            if own != label {
                return Err(invalid!(
                    "{}: session label {own} disagrees with {} ({label})",
                    path.display(),
                    cfg.labels.display()
                ));
            }
        }
        let tpath = cfg.transcripts.join(format!("{id}.conllu"));
        let sentences = with_file(&tpath, parse_conllu(&r.read(&tpath)?))?;
        if speakers.contains_key(&id) {
            return Err(invalid!(
                "speaker id {id} appears in more than one session file"
            ));
        }
        speakers.insert(
            id,
            SpeakerData {
                session,
                sentences,
                label,
            },
        );
    }
    let missing: Vec<&str> = labels
        .keys()
        .filter(|s| !speakers.contains_key(*s))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(invalid!(
            "labelled speakers without a session file: {}",
            missing.join(", ")
        ));
    }
    if speakers.is_empty() {
        return Err(invalid!("dataset has no sessions"));
    }
    Ok(Dataset {
        speakers,
        lexicon,
        registry,
        fingerprint: hex::encode(r.hasher.finalize()),
    })
}

/// Per-speaker model inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerFeatures {
    /// Complexity measures followed by disfluency measures, one row per
    /// window.
    pub contour: FeatureContour,
    /// Column means of the complexity part.
    pub complexity_mean: Vec<f64>,
    /// Means of the per-utterance disfluency vectors.
    pub disfluency_mean: Vec<f64>,
}

/// Disfluency vectors averaged over the same sliding windows the complexity
/// contour uses.
pub fn disfluency_contour(
    session: &SessionRecord,
    lex: &SyllableLexicon,
    pause: &PauseConfig,
    ws: usize,
) -> Result<FeatureContour> {
    let vectors: Vec<[f64; 8]> = session
        .utterances()
        .iter()
        .map(|u| disfluency_vector(u, lex, pause).to_array())
        .collect();
    let rows = windows(&vectors, ws)?
        .into_iter()
        .map(|w| {
            (0..8)
                .map(|j| w.iter().map(|v| v[j]).sum::<f64>() / w.len() as f64)
                .collect()
        })
        .collect();
    Ok(FeatureContour {
        speaker_id: session.speaker_id.clone(),
        names: DisfluencyVector::NAMES
            .iter()
            .map(|n| n.to_string())
            .collect(),
        rows,
    })
}

/// Builds contours and speaker-level aggregates. Transcripts must have one
/// sentence per utterance so the two feature families line up row by row.
pub fn extract_features(
    ds: &Dataset,
    window: &WindowConfig,
    pause: &PauseConfig,
) -> Result<BTreeMap<String, SpeakerFeatures>> {
    window.validate()?;
    pause.validate()?;
    ds.speakers
        .iter()
        .map(|(id, d)| {
            let n_utt = d.session.utterances().len();
            if d.sentences.len() != n_utt {
                return Err(invalid!(
                    "speaker {id}: transcript has {} sentences but the session has {n_utt} utterances",
                    d.sentences.len()
                ));
            }
            let complexity = contour(id, &d.sentences, &ds.registry, window)?;
            let disfl = disfluency_contour(&d.session, &ds.lexicon, pause, window.ws)?;
            let per_utt = disfluency_contour(&d.session, &ds.lexicon, pause, 1)?;
            Ok((
                id.clone(),
                SpeakerFeatures {
                    complexity_mean: complexity.column_means(),
                    disfluency_mean: per_utt.column_means(),
                    contour: complexity.concat(&disfl)?,
                },
            ))
        })
        .collect()
}
