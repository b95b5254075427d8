//! Sliding-window complexity contours.
//!
//! A window of `ws` consecutive sentences slides over a transcript one
//! sentence at a time; every measure in a [`Registry`] is evaluated once per
//! window. With the default `ws = 1` the contour has one row per sentence.

mod information;
mod lexical;
mod registry;
mod syntactic;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ingest::Sentence;

pub use information::{deflate_ratio, ngram_logfreq, text_view, TextView, DEFLATE_LEVEL};
pub use lexical::{cttr, lexical_density, lexical_tokens, sophistication, ttr};
pub use registry::{Category, Measure, MeasureId, Registry, SyntacticMeasure};
pub use syntactic::{syntactic_counts, syntactic_measures, SyntacticCounts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// Sentences per window.
    pub ws: usize,
    /// Additive smoothing constant for n-gram log frequencies.
    pub smoothing: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            ws: 1,
            smoothing: 1.0,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ws == 0 {
            return Err(Error::Config("window size ws must be at least 1".into()));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(Error::Config("n-gram smoothing must be positive".into()));
        }
        Ok(())
    }
}

/// Windows of `ws` consecutive items advanced by one. Fewer than `ws` items
/// give a single window holding all of them.
pub fn windows<T>(items: &[T], ws: usize) -> Result<Vec<&[T]>> {
    if ws == 0 {
        return Err(Error::Config("window size ws must be at least 1".into()));
    }
    if items.is_empty() {
        return Err(invalid!("cannot window an empty transcript"));
    }
    if items.len() < ws {
        return Ok(vec![items]);
    }
    Ok(items.windows(ws).collect())
}

/// Per-window feature rows for one speaker. Every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureContour {
    pub speaker_id: String,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureContour {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column-wise mean over rows.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.dim()];
        for row in &self.rows {
            for (m, x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.rows.len().max(1) as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Row-wise concatenation `self ∥ other`. Both must have the same row
    /// count.
    pub fn concat(&self, other: &FeatureContour) -> Result<FeatureContour> {
        if self.len() != other.len() {
            return Err(invalid!(
                "speaker {:?}: {} contour rows vs {} rows to append",
                self.speaker_id,
                self.len(),
                other.len()
            ));
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(FeatureContour {
            speaker_id: self.speaker_id.clone(),
            names,
            rows,
        })
    }

    /// `speaker_id,utt_index,<measure columns...>`
    pub fn to_csv(&self) -> String {
        let mut out = format!("speaker_id,utt_index,{}\n", self.names.join(","));
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{},{}", self.speaker_id, i);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates every registry measure over every window. Missing values are
/// replaced by the mean of the same measure's present values within this
/// contour, or 0 when the measure is missing everywhere.
pub fn contour(
    speaker_id: &str,
    sentences: &[Sentence],
    registry: &Registry,
    cfg: &WindowConfig,
) -> Result<FeatureContour> {
    cfg.validate()?;
    let wins = windows(sentences, cfg.ws).map_err(|e| invalid!("speaker {speaker_id:?}: {e}"))?;
    let raw: Vec<Vec<Option<f64>>> = wins
        .iter()
        .map(|w| registry.measures().iter().map(|m| m.eval(w, cfg)).collect())
        .collect();

    let dim = registry.len();
    let mut fill = vec![0.0; dim];
    for (j, f) in fill.iter_mut().enumerate() {
        let present: Vec<f64> = raw.iter().filter_map(|r| r[j]).collect();
        if !present.is_empty() {
            *f = present.iter().sum::<f64>() / present.len() as f64;
        }
    }
    let rows = raw
        .into_iter()
        .map(|r| {
            r.into_iter()
                .zip(&fill)
                .map(|(v, f)| v.unwrap_or(*f))
                .collect()
        })
        .collect();
    Ok(FeatureContour {
        speaker_id: speaker_id.to_owned(),
        names: registry.names(),
        rows,
    })
}
