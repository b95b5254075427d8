use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::{extract_features, load_dataset, DatasetConfig, SpeakerFeatures};
use super::folds::{make_folds, FoldPlan};
use super::metrics::{compute_metrics, MetricsReport};
use super::report::{render_report, ReportFormat};
use super::standardize::Standardizer;
use super::write_atomic;
use crate::contours::WindowConfig;
use crate::disfluency::{DisfluencyVector, PauseConfig};
use crate::ensemble::{
    audit_stack, cnn_bag_fit, hard_vote, model_a_predict, model_b_fit, read_embeddings,
    read_external_file, read_predictions, stack_fit, stack_predict, BagSpec, EmbeddingSet,
    InternalBase, PredictionSet, PredictionVector, StackConfig, VoteTable,
};
use crate::error::{invalid, Error, Result};
use crate::ingest::Label;
use crate::nn::{
    cnn_fit, logistic_fit, CnnSpec, Container, Differentiable, FusionInput, Matrix, TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// A single CNN over the feature contour.
    Cnn,
    /// Logistic regression on speaker-mean complexity measures.
    LrComp,
    /// Logistic regression on speaker-mean disfluency measures.
    LrDisfl,
    /// CNN bag and an external model's instances, pooled by majority vote.
    ModelA,
    /// Bag of CNN + embedding fusion models.
    ModelB,
    /// Two-stage stacking.
    ModelC,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::LrComp => "lr_comp",
            ModelKind::LrDisfl => "lr_disfl",
            ModelKind::ModelA => "model_a",
            ModelKind::ModelB => "model_b",
            ModelKind::ModelC => "model_c",
        }
    }

    fn needs_external(self) -> bool {
        matches!(
            self,
            ModelKind::ModelA | ModelKind::ModelB | ModelKind::ModelC
        )
    }
}

/// Tie-breaking rule for majority votes. Only one rule is implemented; the
/// field exists so configs state it explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    CountsThenMeanProbThenCn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExternalConfig {
    pub predictions: Vec<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// External model whose instances join the CNN bag in model A.
    pub vote_model: String,
    /// Embedding model used by model B.
    pub fusion_model: String,
    /// External base models of model C, after the two internal ones.
    pub stack_models: Vec<String>,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            predictions: Vec::new(),
            embeddings: None,
            vote_model: "ernie".into(),
            fusion_model: "ernie".into(),
            stack_models: vec!["ernie".into(), "bert".into()],
        }
    }
}

/// Everything one cross-validation run depends on. Relative paths resolve
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub output_dir: PathBuf,
    pub k: usize,
    pub fold_seed: u64,
    /// Use this fold plan instead of generating one (for example the plan
    /// external predictions were produced against).
    pub fold_plan: Option<PathBuf>,
    pub models: Vec<ModelKind>,
    pub window: WindowConfig,
    pub pause: PauseConfig,
    /// CNN geometry; `input_dim` is taken from the data and must be 0 or
    /// match it.
    pub cnn: CnnSpec,
    pub train: TrainConfig,
    pub bag: BagSpec,
    pub stack: StackConfig,
    pub external: ExternalConfig,
    pub tie_break: TieBreak,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            output_dir: PathBuf::from("results"),
            k: 5,
            fold_seed: 0,
            fold_plan: None,
            models: vec![ModelKind::Cnn],
            window: WindowConfig::default(),
            pause: PauseConfig::default(),
            cnn: CnnSpec::default(),
            train: TrainConfig::default(),
            bag: BagSpec::default(),
            stack: StackConfig::default(),
            external: ExternalConfig::default(),
            tie_break: TieBreak::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_slice(bytes)
            .map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models selected".into()));
        }
        self.window.validate()?;
        self.pause.validate()?;
        self.train.validate()?;
        self.bag.validate()?;
        let mut spec = self.cnn.clone();
        spec.input_dim = spec.input_dim.max(1);
        spec.validate()
    }

    /// Canonical JSON of the resolved config; its hash identifies the run.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }
}

/// Reproducibility record written next to the reports. It holds no
/// timestamps, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub dataset_fingerprint: String,
    pub folds: Vec<FoldRecord>,
    /// SHA-256 of every other file written by the run.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Stage-2 rows audited for model C and how many were contaminated.
    pub stack_rows: Option<usize>,
    pub stack_contaminated: Option<usize>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub reports: Vec<MetricsReport>,
    pub manifest: RunManifest,
    pub plan: FoldPlan,
    pub predictions: PredictionSet,
    pub output_dir: PathBuf,
}

/// Seed for fold `f` derived from a base seed; kept disjoint from the
/// `base ^ i` instance seeds for any realistic bag size.
fn fold_seed(base: u64, fold: usize) -> u64 {
    base ^ ((fold as u64 + 1) << 32)
}

/// Class probabilities for one speaker and the label they were turned into.
type FeaturePick = fn(&SpeakerFeatures) -> &Vec<f64>;

type Row = (Vec<f64>, Label);

type Decision = ([f64; 2], Label);

fn decide(p: [f64; 2]) -> Decision {
    (p, hard_vote(p))
}

struct Inputs {
    features: BTreeMap<String, SpeakerFeatures>,
    labels: BTreeMap<String, Label>,
    predictions: PredictionSet,
    embeddings: EmbeddingSet,
}

fn standardized_contours(
    inputs: &Inputs,
    train: &[String],
) -> Result<(Standardizer, BTreeMap<String, Matrix>)> {
    let st = Standardizer::fit(
        train
            .iter()
            .flat_map(|s| inputs.features[s].contour.rows.iter().map(Vec::as_slice)),
    )?;
    let mats = inputs
        .features
        .iter()
        .map(|(s, f)| {
            let rows: Vec<Vec<f64>> = f.contour.rows.iter().map(|r| st.apply(r)).collect();
            Ok((s.clone(), Matrix::from_rows(&rows)?))
        })
        .collect::<Result<_>>()?;
    Ok((st, mats))
}

fn lr_predict(
    inputs: &Inputs,
    train: &[String],
    test: &[String],
    pick: fn(&SpeakerFeatures) -> &Vec<f64>,
    l2: f64,
    seed: u64,
) -> Result<BTreeMap<String, Decision>> {
    let st = Standardizer::fit(train.iter().map(|s| pick(&inputs.features[s]).as_slice()))?;
    let data: Vec<(Vec<f64>, Label)> = train
        .iter()
        .map(|s| (st.apply(pick(&inputs.features[s])), inputs.labels[s]))
        .collect();
    let (model, _) = logistic_fit(&data, l2, seed)?;
    test.iter()
        .map(|s| {
            Ok((
                s.clone(),
                decide(model.predict(&st.apply(pick(&inputs.features[s])))?),
            ))
        })
        .collect()
}

fn external_votes(
    preds: &PredictionSet,
    model: &str,
    test: &[String],
    plan: &FoldPlan,
) -> Result<VoteTable> {
    let table = preds.vote_table(model);
    for s in test {
        for p in preds.for_model(model).filter(|p| &p.speaker_id == s) {
            if p.fold != plan.fold_of(s) {
                return Err(invalid!(
                    "{model} prediction for speaker {s} has fold {:?}, expected {:?}",
                    p.fold,
                    plan.fold_of(s)
                ));
            }
        }
    }
    Ok(test
        .iter()
        .filter_map(|s| table.get(s).map(|v| (s.clone(), v.clone())))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    cfg: &ExperimentConfig,
    kind: ModelKind,
    inputs: &Inputs,
    plan: &FoldPlan,
    fold: usize,
    spec: &CnnSpec,
    contours: &BTreeMap<String, Matrix>,
    record: &mut FoldRecord,
) -> Result<BTreeMap<String, Decision>> {
    let train = plan.train_speakers(fold);
    let test = plan.test_speakers(fold);
    let labels = &inputs.labels;
    let train_set = |xs: &BTreeMap<String, Matrix>| -> Vec<(Matrix, Label)> {
        train.iter().map(|s| (xs[s].clone(), labels[s])).collect()
    };
    let test_inputs = |xs: &BTreeMap<String, Matrix>| -> BTreeMap<String, Matrix> {
        test.iter().map(|s| (s.clone(), xs[s].clone())).collect()
    };
    let mut bag = cfg.bag;
    bag.base_seed = fold_seed(cfg.bag.base_seed, fold);

    match kind {
        ModelKind::Cnn => {
            let (model, _) = cnn_fit(
                &train_set(contours),
                spec,
                &cfg.train.with_seed(fold_seed(cfg.train.seed, fold)),
            )?;
            test.iter()
                .map(|s| Ok((s.clone(), decide(model.predict(&contours[s])?))))
                .collect()
        }
        ModelKind::LrComp => lr_predict(
            inputs,
            &train,
            &test,
            |f| &f.complexity_mean,
            cfg.stack.l2,
            fold_seed(cfg.stack.seed, fold),
        ),
        ModelKind::LrDisfl => lr_predict(
            inputs,
            &train,
            &test,
            |f| &f.disfluency_mean,
            cfg.stack.l2,
            fold_seed(cfg.stack.seed, fold),
        ),
        ModelKind::ModelA => {
            let cnn = cnn_bag_fit(&train_set(contours), spec, &cfg.train, &bag)?;
            let cnn_votes = cnn.votes(&test_inputs(contours))?;
            let ext = external_votes(&inputs.predictions, &cfg.external.vote_model, &test, plan)?;
            let out = model_a_predict(&cnn_votes, &ext, &test)?;
            Ok(out
                .into_iter()
                .map(|(s, o)| (s, (o.mean_probs, o.label)))
                .collect())
        }
        ModelKind::ModelB => {
            let m = &cfg.external.fusion_model;
            let dim = inputs
                .embeddings
                .dim(m)
                .ok_or_else(|| invalid!("no embeddings for fusion model {m}"))?;
            let fused = |s: &String| -> Result<FusionInput> {
                Ok(FusionInput {
                    sequence: contours[s].clone(),
                    embedding: inputs.embeddings.require(m, s)?.to_vec(),
                })
            };
            let data = train
                .iter()
                .map(|s| Ok((fused(s)?, labels[s])))
                .collect::<Result<Vec<_>>>()?;
            let bag_models = model_b_fit(&data, spec, dim, &cfg.train, &bag)?;
            let test_x = test
                .iter()
                .map(|s| Ok((s.clone(), fused(s)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let out = bag_models.predict(&test_x)?;
            Ok(out
                .into_iter()
                .map(|(s, o)| (s, (o.mean_probs, o.label)))
                .collect())
        }
        ModelKind::ModelC => {
            let internal = [
                InternalBase {
                    model_id: "lr_comp".into(),
                    features: inputs
                        .features
                        .iter()
                        .map(|(s, f)| (s.clone(), f.complexity_mean.clone()))
                        .collect(),
                },
                InternalBase {
                    model_id: "lr_disfl".into(),
                    features: inputs
                        .features
                        .iter()
                        .map(|(s, f)| (s.clone(), f.disfluency_mean.clone()))
                        .collect(),
                },
            ];
            let inner = plan.restrict(&train);
            let stack_cfg = StackConfig {
                seed: fold_seed(cfg.stack.seed, fold),
                ..cfg.stack
            };
            let model = stack_fit(
                &internal,
                &inputs.predictions,
                &cfg.external.stack_models,
                labels,
                &inner,
                &stack_cfg,
            )?;
            let audit = audit_stack(&model, &inner);
            record.stack_rows = Some(audit.rows);
            record.stack_contaminated = Some(audit.contaminated.len());
            if !audit.contaminated.is_empty() {
                return Err(invalid!(
                    "stacking audit found {} contaminated stage-2 rows",
                    audit.contaminated.len()
                ));
            }
            let probs = stack_predict(&model, &internal, &inputs.predictions, &test)?;
            Ok(probs.into_iter().map(|(s, p)| (s, decide(p))).collect())
        }
    }
}

/// Loads the dataset, runs k-fold cross-validation for every configured
/// model and writes `report.csv`, `report.md`, `predictions.jsonl`,
/// `fold_plan.json` and `manifest.json` to the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentOutcome> {
    let started = std::time::Instant::now();
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset, base_dir)?;
    let features = extract_features(&ds, &cfg.window, &cfg.pause)?;
    let labels = ds.labels();

    let plan = match &cfg.fold_plan {
        Some(p) => {
            let plan = FoldPlan::load(&base_dir.join(p))?;
            plan.check_covers(labels.keys())?;
            if plan.k != cfg.k {
                return Err(Error::Config(format!(
                    "fold plan has k = {}, config says {}",
                    plan.k, cfg.k
                )));
            }
            plan
        }
        None => make_folds(&labels, cfg.k, cfg.fold_seed)?,
    };

    let mut predictions = PredictionSet::default();
    let mut embeddings = EmbeddingSet::default();
    if cfg.models.iter().any(|m| m.needs_external()) {
        for p in &cfg.external.predictions {
            predictions.extend(read_external_file(&base_dir.join(p), read_predictions)?)?;
        }
        if let Some(p) = &cfg.external.embeddings {
            embeddings = read_external_file(&base_dir.join(p), read_embeddings)?;
        }
    }
    let inputs = Inputs {
        features,
        labels,
        predictions,
        embeddings,
    };

    let dim = inputs
        .features
        .values()
        .next()
        .map_or(0, |f| f.contour.dim());
    if cfg.cnn.input_dim != 0 && cfg.cnn.input_dim != dim {
        return Err(Error::Config(format!(
            "cnn.input_dim is {} but the contours have {dim} features",
            cfg.cnn.input_dim
        )));
    }
    let spec = CnnSpec {
        input_dim: dim,
        ..cfg.cnn.clone()
    };

    let mut models: Vec<ModelKind> = cfg.models.clone();
    models.dedup();
    let mut fold_records = Vec::new();
    let mut oof = PredictionSet::default();
    let mut per_model: BTreeMap<ModelKind, Vec<_>> = BTreeMap::new();
    for fold in 0..cfg.k {
        let train = plan.train_speakers(fold);
        let test = plan.test_speakers(fold);
        if test.is_empty() {
            return Err(invalid!("fold {fold} has no speakers"));
        }
        let mut record = FoldRecord {
            fold,
            n_train: train.len(),
            n_test: test.len(),
            stack_rows: None,
            stack_contaminated: None,
        };
        let (_, contours) = standardized_contours(&inputs, &train).map_err(|e| e.in_fold(fold))?;
        for &kind in &models {
            log::info!("fold {fold}: {}", kind.as_str());
            let probs = run_fold(
                cfg,
                kind,
                &inputs,
                &plan,
                fold,
                &spec,
                &contours,
                &mut record,
            )
            .map_err(|e| e.in_fold(fold))?;
            let predicted: BTreeMap<String, Label> =
                probs.iter().map(|(s, (_, l))| (s.clone(), *l)).collect();
            let truth: BTreeMap<String, Label> =
                test.iter().map(|s| (s.clone(), inputs.labels[s])).collect();
            per_model
                .entry(kind)
                .or_default()
                .push(compute_metrics(&predicted, &truth).map_err(|e| e.in_fold(fold))?);
            for (s, (p, _)) in probs {
                let sum = p[0] + p[1];
                oof.insert(PredictionVector {
                    speaker_id: s,
                    model_id: kind.as_str().into(),
                    instance_id: 0,
                    fold: Some(fold),
                    probs: [p[0] / sum, p[1] / sum],
                })?;
            }
        }
        fold_records.push(record);
    }
    let reports: Vec<MetricsReport> = models
        .iter()
        .map(|k| MetricsReport::from_folds(k.as_str(), per_model.remove(k).unwrap_or_default()))
        .collect();

    let out_dir = base_dir.join(&cfg.output_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let files: Vec<(&str, Vec<u8>)> = vec![
        ("report.csv", render_report(&reports, ReportFormat::Csv)),
        ("report.md", render_report(&reports, ReportFormat::Markdown)),
        ("predictions.jsonl", oof.to_jsonl().into_bytes()),
        ("fold_plan.json", plan.to_json().into_bytes()),
    ];
    let mut artifacts = BTreeMap::new();
    for (name, bytes) in &files {
        write_atomic(&out_dir.join(name), bytes)?;
        artifacts.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
    }
    let canonical = cfg.canonical_json();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::from_str(&canonical).expect("round-trips"),
        config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
        seeds: BTreeMap::from([
            ("fold_seed".to_string(), cfg.fold_seed),
            ("train_seed".to_string(), cfg.train.seed),
            ("bag_base_seed".to_string(), cfg.bag.base_seed),
            ("stack_seed".to_string(), cfg.stack.seed),
        ]),
        dataset_fingerprint: ds.fingerprint.clone(),
        folds: fold_records,
        artifacts,
    };
    let mut mjson = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    mjson.push('\n');
    write_atomic(&out_dir.join("manifest.json"), mjson.as_bytes())?;
    let timing = serde_json::json!({ "elapsed_seconds": started.elapsed().as_secs_f64() });
    write_atomic(
        &out_dir.join("timing.json"),
        format!("{timing}\n").as_bytes(),
    )?;
    Ok(ExperimentOutcome {
        reports,
        manifest,
        plan,
        predictions: oof,
        output_dir: out_dir,
    })
}

/// Fits one model on every speaker in the dataset and packages it, with
/// the feature standardization it was trained under, as a model container.
/// Only the single models can be trained this way.
pub fn train_final(cfg: &ExperimentConfig, base_dir: &Path, kind: ModelKind) -> Result<Container> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset, base_dir)?;
    let features = extract_features(&ds, &cfg.window, &cfg.pause)?;
    let labels = ds.labels();
    let ids: Vec<String> = labels.keys().cloned().collect();
    let fit_rows = |pick: FeaturePick| -> Result<(Standardizer, Vec<Row>)> {
        let st = Standardizer::fit(ids.iter().map(|s| pick(&features[s]).as_slice()))?;
        let data = ids
            .iter()
            .map(|s| (st.apply(pick(&features[s])), labels[s]))
            .collect();
        Ok((st, data))
    };
    let meta = |st: &Standardizer, names: Vec<String>| {
        serde_json::json!({
            "features": names,
            "standardizer": { "mean": st.mean, "sd": st.sd },
            "dataset_fingerprint": ds.fingerprint,
            "n_speakers": ids.len(),
        })
    };
    match kind {
        ModelKind::Cnn => {
            let first = features
                .values()
                .next()
                .ok_or_else(|| invalid!("dataset is empty"))?;
            let names = first.contour.names.clone();
            let st = Standardizer::fit(
                features
                    .values()
                    .flat_map(|f| f.contour.rows.iter().map(Vec::as_slice)),
            )?;
            let data = ids
                .iter()
                .map(|s| {
                    let rows: Vec<Vec<f64>> = features[s]
                        .contour
                        .rows
                        .iter()
                        .map(|r| st.apply(r))
                        .collect();
                    Ok((Matrix::from_rows(&rows)?, labels[s]))
                })
                .collect::<Result<Vec<_>>>()?;
            let spec = CnnSpec {
                input_dim: names.len(),
                ..cfg.cnn.clone()
            };
            let (model, log) = cnn_fit(&data, &spec, &cfg.train)?;
            let mut m = meta(&st, names);
            m["final_loss"] = log.final_loss().into();
            Ok(Container {
                kind: kind.as_str().into(),
                spec: serde_json::to_value(&spec).expect("spec serializes"),
                meta: m,
                params: model.params().clone(),
            })
        }
        ModelKind::LrComp | ModelKind::LrDisfl => {
            let (pick, names): (FeaturePick, Vec<String>) = if kind == ModelKind::LrComp {
                (|f| &f.complexity_mean, ds.registry.names())
            } else {
                (
                    |f| &f.disfluency_mean,
                    DisfluencyVector::NAMES
                        .iter()
                        .map(|n| n.to_string())
                        .collect(),
                )
            };
            let (st, data) = fit_rows(pick)?;
            let (model, fit) = logistic_fit(&data, cfg.stack.l2, cfg.stack.seed)?;
            let mut m = meta(&st, names);
            m["objective"] = fit.objective.into();
            m["converged"] = fit.converged.into();
            Ok(Container {
                kind: kind.as_str().into(),
                spec: serde_json::json!({ "l2": fit.l2, "dim": model.dim() }),
                meta: m,
                params: model.params().clone(),
            })
        }
        other => Err(Error::Config(format!(
            "{} is an ensemble; it is evaluated with cross-validation only",
            other.as_str()
        ))),
    }
}

/// Reads a config file, applies `key.path=value` overrides, and validates.
pub fn load_experiment_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut v: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| {
        Error::parse(
            path.display().to_string(),
            format!("line {}", e.line()),
            e.to_string(),
        )
    })?;
    for o in overrides {
        apply_override(&mut v, o)?;
    }
    ExperimentConfig::from_json(&serde_json::to_vec(&v).expect("value serializes"))
}

/// Sets a dotted key in a JSON object. The value is parsed as JSON when it
/// can be, otherwise taken as a string.
pub fn apply_override(v: &mut serde_json::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    if key.is_empty() {
        return Err(Error::Config(format!(
            "override {assignment:?} has an empty key"
        )));
    }
    let value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cur = v;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| {
            Error::Config(format!(
                "override {key}: {} is not an object",
                parts[..i].join(".")
            ))
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_parse() {
        let mut v = serde_json::json!({"train": {"epochs": 5}});
        apply_override(&mut v, "train.epochs=7").unwrap();
        apply_override(&mut v, "bag.n_instances=3").unwrap();
        apply_override(&mut v, "output_dir=out dir").unwrap();
        assert_eq!(v["train"]["epochs"], 7);
        assert_eq!(v["bag"]["n_instances"], 3);
        assert_eq!(v["output_dir"], "out dir");
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "output_dir.x=1").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(br#"{"k": 5, "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(br#"{"train": {"epoch": 5}}"#).is_err());
        let cfg = ExperimentConfig::from_json(br#"{"models": ["cnn", "model_c"]}"#).unwrap();
        assert_eq!(cfg.models, vec![ModelKind::Cnn, ModelKind::ModelC]);
    }
}
