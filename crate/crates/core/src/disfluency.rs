//! Per-utterance (dis)fluency measures computed from word timings.
//!
//! Eight measures per utterance: mean syllable duration, syllables per
//! minute, total pause time, long and short silent pause counts, `uh` and
//! `um` counts, and mean ASR confidence.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ingest::{syllable_count, Label, SessionRecord, SyllableLexicon, Utterance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FilledPause {
    Uh,
    Um,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PauseConfig {
    /// Gaps strictly longer than this are long pauses.
    pub long_threshold_s: f64,
    /// Gaps at or below this are not pauses at all.
    pub min_gap_s: f64,
    pub filled_pause_aliases: BTreeMap<String, FilledPause>,
    /// When false, filled-pause tokens are left out of syllable and
    /// duration totals.
    pub filled_pauses_in_rate: bool,
}

impl Default for PauseConfig {
    fn default() -> Self {
        let aliases = [
            ("uh", FilledPause::Uh),
            ("er", FilledPause::Uh),
            ("eh", FilledPause::Uh),
            ("um", FilledPause::Um),
            ("hm", FilledPause::Um),
            ("uhm", FilledPause::Um),
        ];
        PauseConfig {
            long_threshold_s: 2.0,
            min_gap_s: 0.25,
            filled_pause_aliases: aliases.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            filled_pauses_in_rate: true,
        }
    }
}

impl PauseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_gap_s >= 0.0 && self.min_gap_s < self.long_threshold_s) {
            return Err(Error::Config(format!(
                "pause thresholds need 0 <= min_gap_s < long_threshold_s (got {} and {})",
                self.min_gap_s, self.long_threshold_s
            )));
        }
        Ok(())
    }

    pub fn filled_pause(&self, token: &str) -> Option<FilledPause> {
        self.filled_pause_aliases.get(token).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisfluencyVector {
    pub mean_syllable_duration: f64,
    pub syllables_per_minute: f64,
    pub pause_time: f64,
    pub n_long_pauses: u32,
    pub n_short_pauses: u32,
    pub n_uh: u32,
    pub n_um: u32,
    pub mean_confidence: f64,
}

impl DisfluencyVector {
    /// Short column names, in [`to_array`](Self::to_array) order.
    pub const NAMES: [&'static str; 8] = [
        "msd",
        "spm",
        "pause_time",
        "n_long",
        "n_short",
        "n_uh",
        "n_um",
        "mean_conf",
    ];

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.mean_syllable_duration,
            self.syllables_per_minute,
            self.pause_time,
            self.n_long_pauses as f64,
            self.n_short_pauses as f64,
            self.n_uh as f64,
            self.n_um as f64,
            self.mean_confidence,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauseFeatures {
    pub pause_time: f64,
    pub n_long: u32,
    pub n_short: u32,
}

/// Silence between consecutive words, clamped at zero.
pub fn inter_word_gaps(u: &Utterance) -> Vec<f64> {
    u.words()
        .windows(2)
        .map(|p| (p[1].start_s - p[0].end_s).max(0.0))
        .collect()
}

pub fn pause_features(u: &Utterance, cfg: &PauseConfig) -> PauseFeatures {
    let mut f = PauseFeatures {
        pause_time: 0.0,
        n_long: 0,
        n_short: 0,
    };
    for gap in inter_word_gaps(u) {
        if gap <= cfg.min_gap_s {
            continue;
        }
        f.pause_time += gap;
        if gap > cfg.long_threshold_s {
            f.n_long += 1;
        } else {
            f.n_short += 1;
        }
    }
    f
}

/// Returns `(mean_syllable_duration, syllables_per_minute)`.
///
/// The rate uses the whole utterance span, internal pauses included. A
/// zero-length span gives a rate of 0.
pub fn rate_features(u: &Utterance, lex: &SyllableLexicon, cfg: &PauseConfig) -> (f64, f64) {
    let mut syllables = 0u32;
    let mut spoken = 0.0;
    for w in u.words() {
        if !cfg.filled_pauses_in_rate && cfg.filled_pause(&w.text).is_some() {
            continue;
        }
        syllables += w.syllables.unwrap_or_else(|| syllable_count(lex, &w.text));
        spoken += w.duration();
    }
    if syllables == 0 {
        return (0.0, 0.0);
    }
    let span = u.span();
    let per_minute = if span > 0.0 {
        syllables as f64 / (span / 60.0)
    } else {
        0.0
    };
    (spoken / syllables as f64, per_minute)
}

/// Returns `(n_uh, n_um)`.
pub fn filled_pause_counts(u: &Utterance, cfg: &PauseConfig) -> (u32, u32) {
    let mut counts = (0, 0);
    for w in u.words() {
        match cfg.filled_pause(&w.text) {
            Some(FilledPause::Uh) => counts.0 += 1,
            Some(FilledPause::Um) => counts.1 += 1,
            None => {}
        }
    }
    counts
}

pub fn disfluency_vector(
    u: &Utterance,
    lex: &SyllableLexicon,
    cfg: &PauseConfig,
) -> DisfluencyVector {
    let pauses = pause_features(u, cfg);
    let (msd, spm) = rate_features(u, lex, cfg);
    let (n_uh, n_um) = filled_pause_counts(u, cfg);
    let conf: f64 = u.words().iter().map(|w| w.confidence).sum();
    DisfluencyVector {
        mean_syllable_duration: msd,
        syllables_per_minute: spm,
        pause_time: pauses.pause_time,
        n_long_pauses: pauses.n_long,
        n_short_pauses: pauses.n_short,
        n_uh,
        n_um,
        mean_confidence: conf / u.words().len() as f64,
    }
}

/// Arithmetic mean and population standard deviation per measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSummary {
    pub n: usize,
    pub mean: [f64; 8],
    pub sd: [f64; 8],
}

impl MeasureSummary {
    pub fn from_rows(rows: &[[f64; 8]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid!("cannot summarise zero rows"));
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; 8];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut sd = [0.0; 8];
        for r in rows {
            for ((s, x), m) in sd.iter_mut().zip(r).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        sd.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        Ok(MeasureSummary {
            n: rows.len(),
            mean,
            sd,
        })
    }
}

pub fn speaker_summary(
    session: &SessionRecord,
    lex: &SyllableLexicon,
    cfg: &PauseConfig,
) -> Result<MeasureSummary> {
    let rows: Vec<[f64; 8]> = session
        .utterances()
        .iter()
        .map(|u| disfluency_vector(u, lex, cfg).to_array())
        .collect();
    MeasureSummary::from_rows(&rows)
        .map_err(|_| invalid!("session {:?} has no utterances", session.speaker_id))
}

/// Per-utterance vectors as CSV:
/// `speaker_id,utt_index,msd,spm,pause_time,n_long,n_short,n_uh,n_um,mean_conf`.
pub fn vectors_csv(sessions: &[SessionRecord], lex: &SyllableLexicon, cfg: &PauseConfig) -> String {
    let mut out = String::from("speaker_id,utt_index,");
    out.push_str(&DisfluencyVector::NAMES.join(","));
    out.push('\n');
    for s in sessions {
        for u in s.utterances() {
            let v = disfluency_vector(u, lex, cfg);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.speaker_id,
                u.index(),
                v.mean_syllable_duration,
                v.syllables_per_minute,
                v.pause_time,
                v.n_long_pauses,
                v.n_short_pauses,
                v.n_uh,
                v.n_um,
                v.mean_confidence
            );
        }
    }
    out
}

/// Group statistics by label at two granularities: `utterance` pools every
/// utterance of the group, `session` first averages within each speaker.
/// Unlabelled sessions are left out. SDs are population SDs.
pub fn summary_csv(
    sessions: &[SessionRecord],
    lex: &SyllableLexicon,
    cfg: &PauseConfig,
) -> Result<String> {
    type Split = (Vec<[f64; 8]>, Vec<[f64; 8]>);
    let mut by_label: BTreeMap<Label, Split> = BTreeMap::new();
    for s in sessions {
        let Some(label) = s.label else { continue };
        let entry = by_label.entry(label).or_default();
        for u in s.utterances() {
            entry.0.push(disfluency_vector(u, lex, cfg).to_array());
        }
        entry.1.push(speaker_summary(s, lex, cfg)?.mean);
    }
    let mut out =
        String::from("granularity,measure,ad_n,ad_mean,ad_sd_pop,cn_n,cn_mean,cn_sd_pop\n");
    for (granularity, pick) in [("utterance", 0usize), ("session", 1)] {
        let summarise = |label: Label| -> Option<MeasureSummary> {
            let rows = by_label
                .get(&label)
                .map(|g| if pick == 0 { &g.0 } else { &g.1 })?;
            MeasureSummary::from_rows(rows).ok()
        };
        let ad = summarise(Label::Ad);
        let cn = summarise(Label::Cn);
        for (i, name) in DisfluencyVector::NAMES.iter().enumerate() {
            let cell = |s: &Option<MeasureSummary>| match s {
                Some(s) => format!("{},{:.6},{:.6}", s.n, s.mean[i], s.sd[i]),
                None => "0,,".to_string(),
            };
            let _ = writeln!(out, "{granularity},{name},{},{}", cell(&ad), cell(&cn));
        }
    }
    Ok(out)
}
