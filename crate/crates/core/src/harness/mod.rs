//! Cross-validation, metrics, reports, synthetic data and run manifests.

mod dataset;
mod experiment;
mod folds;
mod metrics;
mod report;
mod standardize;
mod synth;

use std::path::Path;

use crate::error::{Error, Result};

pub use dataset::{
    disfluency_contour, extract_features, load_dataset, Dataset, DatasetConfig, SpeakerData,
    SpeakerFeatures,
};
pub use experiment::{
    apply_override, load_experiment_config, run_experiment, train_final, ExperimentConfig,
    ExperimentOutcome, ExternalConfig, FoldRecord, ModelKind, RunManifest, TieBreak,
};
pub use folds::{make_folds, FoldPlan};
pub use metrics::{compute_metrics, FoldMetrics, MetricsReport, Scores};
pub use report::{parse_report_csv, render_report, ReportFormat, CSV_HEADER};
pub use standardize::Standardizer;
pub use synth::{
    synth_fixture, SynthFixture, SYNTH_EMBEDDING_DIM, SYNTH_EXTERNAL_INSTANCES, SYNTH_K, TABLE1,
};

/// Writes via a temporary sibling and a rename, so readers never observe a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
