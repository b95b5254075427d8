//! Parsing and validation of every external input.
//!
//! Parsers are pure functions over byte slices. Everything they return is
//! immutable after construction and satisfies the invariants documented on
//! the type.

mod asr;
mod conllu;
mod lexicon;
mod ngram;
mod tables;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use asr::{parse_asr_session, parse_segmentation, to_asr_json, Segment};
pub use conllu::{parse_conllu, ConlluToken, Sentence};
pub use lexicon::{load_syllable_lexicon, syllable_count, vowel_group_count, SyllableLexicon};
pub use ngram::{load_ngram_table, NgramTable};
pub use tables::{load_labels, load_wordlist, Wordlist};

/// Allowed overlap between consecutive words, in seconds.
pub const OVERLAP_TOLERANCE_S: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "CN")]
    Cn = 0,
    #[serde(rename = "AD")]
    Ad = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Cn, Label::Ad];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Cn),
            1 => Some(Label::Ad),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Cn => "CN",
            Label::Ad => "AD",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "CN" | "cn" | "0" => Ok(Label::Cn),
            "AD" | "ad" | "1" => Ok(Label::Ad),
            other => Err(invalid!("unknown label {other:?} (expected CN or AD)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordToken {
    pub text: String,
    pub start_s: f64,
    pub end_s: f64,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syllables: Option<u32>,
}

impl WordToken {
    pub fn new(text: impl Into<String>, start_s: f64, end_s: f64, confidence: f64) -> Self {
        WordToken {
            text: text.into(),
            start_s,
            end_s,
            confidence,
            syllables: None,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    fn check(&self, at: &str) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(invalid!("{at}: empty word text"));
        }
        if !(self.start_s.is_finite() && self.end_s.is_finite()) {
            return Err(invalid!("{at} ({:?}): non-finite timing", self.text));
        }
        if self.start_s < 0.0 {
            return Err(invalid!(
                "{at} ({:?}): negative start_s {}",
                self.text,
                self.start_s
            ));
        }
        if self.end_s < self.start_s {
            return Err(invalid!(
                "{at} ({:?}): end_s {} precedes start_s {}",
                self.text,
                self.end_s,
                self.start_s
            ));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(invalid!(
                "{at} ({:?}): confidence {} outside [0, 1]",
                self.text,
                self.confidence
            ));
        }
        if self.syllables == Some(0) {
            return Err(invalid!(
                "{at} ({:?}): syllable count must be positive",
                self.text
            ));
        }
        Ok(())
    }
}

/// One sentence-like unit of speech. Words are non-empty, ordered by start
/// time, and overlap their predecessor by at most [`OVERLAP_TOLERANCE_S`].
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    index: usize,
    words: Vec<WordToken>,
}

impl Utterance {
    pub fn new(index: usize, words: Vec<WordToken>) -> Result<Self> {
        if words.is_empty() {
            return Err(invalid!("utterance {index} has no words"));
        }
        for (i, w) in words.iter().enumerate() {
            w.check(&format!("utterance {index} word {i}"))?;
        }
        for (i, pair) in words.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if b.start_s < a.start_s {
                return Err(invalid!(
                    "utterance {index} word {}: start_s {} before previous word's start_s {}",
                    i + 1,
                    b.start_s,
                    a.start_s
                ));
            }
            if b.start_s < a.end_s - OVERLAP_TOLERANCE_S {
                return Err(invalid!(
                    "utterance {index} word {}: overlaps previous word by {:.3} s",
                    i + 1,
                    a.end_s - b.start_s
                ));
            }
        }
        Ok(Utterance { index, words })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn words(&self) -> &[WordToken] {
        &self.words
    }

    pub fn span(&self) -> f64 {
        self.words[self.words.len() - 1].end_s - self.words[0].start_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub speaker_id: String,
    pub label: Option<Label>,
    utterances: Vec<Utterance>,
}

impl SessionRecord {
    pub fn new(
        speaker_id: impl Into<String>,
        label: Option<Label>,
        utterances: Vec<Utterance>,
    ) -> Result<Self> {
        let speaker_id = speaker_id.into();
        if speaker_id.trim().is_empty() {
            return Err(invalid!("empty speaker_id"));
        }
        if utterances.is_empty() {
            return Err(invalid!("session {speaker_id:?} has no utterances"));
        }
        Ok(SessionRecord {
            speaker_id,
            label,
            utterances,
        })
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }
}
