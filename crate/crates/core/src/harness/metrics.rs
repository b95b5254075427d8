use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ingest::Label;

/// The seven report columns in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision_cn: f64,
    pub precision_ad: f64,
    pub recall_cn: f64,
    pub recall_ad: f64,
    pub f1_cn: f64,
    pub f1_ad: f64,
}

impl Scores {
    pub const COLUMNS: [&'static str; 7] = [
        "accuracy",
        "precision_cn",
        "precision_ad",
        "recall_cn",
        "recall_ad",
        "f1_cn",
        "f1_ad",
    ];

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.accuracy,
            self.precision_cn,
            self.precision_ad,
            self.recall_cn,
            self.recall_ad,
            self.f1_cn,
            self.f1_ad,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Scores {
            accuracy: a[0],
            precision_cn: a[1],
            precision_ad: a[2],
            recall_cn: a[3],
            recall_ad: a[4],
            f1_cn: a[5],
            f1_ad: a[6],
        }
    }
}

/// Scores on one split, with the names of metrics whose denominator was 0
/// (reported as 0).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub scores: Scores,
    pub zero_division: Vec<String>,
}

/// One model's per-fold scores plus their mean and population SD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub folds: Vec<FoldMetrics>,
    pub mean: Scores,
    pub sd: Scores,
}

impl MetricsReport {
    pub fn from_folds(model: impl Into<String>, folds: Vec<FoldMetrics>) -> Self {
        let n = folds.len().max(1) as f64;
        let mut mean = [0.0; 7];
        for f in &folds {
            for (m, v) in mean.iter_mut().zip(f.scores.to_array()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; 7];
        for f in &folds {
            for ((s, v), m) in var.iter_mut().zip(f.scores.to_array()).zip(mean) {
                *s += (v - m) * (v - m);
            }
        }
        let sd = var.map(|s| (s / n).sqrt());
        MetricsReport {
            model: model.into(),
            folds,
            mean: Scores::from_array(mean),
            sd: Scores::from_array(sd),
        }
    }
}

fn ratio(num: usize, den: usize, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64, name: &str, flags: &mut Vec<String>) -> f64 {
    if p + r == 0.0 {
        flags.push(name.to_string());
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Accuracy and per-class precision, recall and F1. Both maps must cover the
/// same speakers.
pub fn compute_metrics(
    predicted: &BTreeMap<String, Label>,
    truth: &BTreeMap<String, Label>,
) -> Result<FoldMetrics> {
    if !predicted.keys().eq(truth.keys()) {
        let missing: Vec<&str> = truth
            .keys()
            .filter(|s| !predicted.contains_key(*s))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = predicted
            .keys()
            .filter(|s| !truth.contains_key(*s))
            .map(String::as_str)
            .collect();
        return Err(invalid!(
            "prediction/label speaker sets differ (missing predictions: [{}], unlabeled: [{}])",
            missing.join(", "),
            extra.join(", ")
        ));
    }
    if truth.is_empty() {
        return Err(invalid!("no speakers to score"));
    }
    // confusion[true][pred]
    let mut confusion = [[0usize; 2]; 2];
    for (s, &t) in truth {
        confusion[t.index()][predicted[s].index()] += 1;
    }
    let total = truth.len();
    let correct = confusion[0][0] + confusion[1][1];
    let mut flags = Vec::new();
    let mut per_class = [(0.0, 0.0, 0.0); 2];
    for c in Label::ALL {
        let i = c.index();
        let tp = confusion[i][i];
        let pred_c = confusion[0][i] + confusion[1][i];
        let true_c = confusion[i][0] + confusion[i][1];
        let tag = c.as_str().to_lowercase();
        let p = ratio(tp, pred_c, &format!("precision_{tag}"), &mut flags);
        let r = ratio(tp, true_c, &format!("recall_{tag}"), &mut flags);
        let f = f1(p, r, &format!("f1_{tag}"), &mut flags);
        per_class[i] = (p, r, f);
    }
    flags.sort();
    Ok(FoldMetrics {
        scores: Scores {
            accuracy: correct as f64 / total as f64,
            precision_cn: per_class[0].0,
            precision_ad: per_class[1].0,
            recall_cn: per_class[0].1,
            recall_ad: per_class[1].1,
            f1_cn: per_class[0].2,
            f1_ad: per_class[1].2,
        },
        zero_division: flags,
    })
}
