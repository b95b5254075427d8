use std::collections::{BTreeMap, HashSet};

use serde::Deserialize;

use super::Label;
use crate::error::{invalid, Error, Result};

/// A reference list of common words, stored lowercase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Wordlist(HashSet<String>);

impl Wordlist {
    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for Wordlist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Wordlist(
            iter.into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }
}

/// One word per line; blank lines and `#` comments are ignored.
pub fn load_wordlist(text: &[u8]) -> Result<Wordlist> {
    let text = std::str::from_utf8(text).map_err(|e| {
        Error::parse(
            "wordlist",
            format!("byte {}", e.valid_up_to()),
            "invalid UTF-8",
        )
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.starts_with('#'))
        .collect())
}

#[derive(Deserialize)]
struct LabelRow {
    speaker_id: String,
    label: String,
}

/// Parses a `speaker_id,label` CSV with labels CN or AD.
pub fn load_labels(csv_bytes: &[u8]) -> Result<BTreeMap<String, Label>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("labels CSV", "line 1", e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["speaker_id", "label"] {
        return Err(Error::parse(
            "labels CSV",
            "line 1",
            "expected header speaker_id,label",
        ));
    }
    let mut labels = BTreeMap::new();
    for (i, row) in reader.deserialize::<LabelRow>().enumerate() {
        let line = i + 2;
        let row =
            row.map_err(|e| Error::parse("labels CSV", format!("line {line}"), e.to_string()))?;
        let label = match row.label.as_str() {
            "CN" => Label::Cn,
            "AD" => Label::Ad,
            other => {
                return Err(invalid!(
                    "labels CSV line {line}: label {other:?} is not CN or AD"
                ))
            }
        };
        if labels.insert(row.speaker_id.clone(), label).is_some() {
            return Err(invalid!(
                "labels CSV line {line}: duplicate speaker {:?}",
                row.speaker_id
            ));
        }
    }
    Ok(labels)
}
