use std::collections::HashMap;

use crate::error::{Error, Result};

/// Word → syllable count, keyed by uppercase spelling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SyllableLexicon {
    entries: HashMap<String, u32>,
    skipped_lines: usize,
}

impl SyllableLexicon {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: AsRef<str>,
    {
        let mut lex = SyllableLexicon::default();
        for (word, count) in entries {
            lex.entries
                .entry(word.as_ref().to_uppercase())
                .or_insert(count.max(1));
        }
        lex
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.entries.get(&word.to_uppercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of non-comment lines that carried no phonemes.
    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }
}

/// Loads a CMU Pronouncing Dictionary file.
///
/// Each entry's syllable count is the number of phonemes carrying a stress
/// digit. `WORD(2)`-style variants share their base key and the first
/// pronunciation wins. Entries whose phonemes carry no stress digit at all
/// (e.g. `HMM  HH M`) are stored with one syllable.
pub fn load_syllable_lexicon(dict: &[u8]) -> Result<SyllableLexicon> {
    let text = decode(dict)?;
    let mut lex = SyllableLexicon::default();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        // cmudict.dict appends "# comment" to some entries
        let line = line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let phonemes: Vec<&str> = parts.collect();
        if phonemes.is_empty() {
            lex.skipped_lines += 1;
            continue;
        }
        let base = match word.find('(') {
            Some(i) if word.ends_with(')') && i > 0 => &word[..i],
            _ => word,
        };
        let count = phonemes
            .iter()
            .filter(|p| p.ends_with(['0', '1', '2']))
            .count() as u32;
        lex.entries
            .entry(base.to_uppercase())
            .or_insert(count.max(1));
    }
    if lex.skipped_lines > 0 {
        log::warn!(
            "pronouncing dictionary: skipped {} line(s) without phonemes",
            lex.skipped_lines
        );
    }
    Ok(lex)
}

/// UTF-8 first, then Latin-1. Bytes that decode under neither as text
/// (C0 controls other than tab/CR/LF) are rejected.
fn decode(bytes: &[u8]) -> Result<String> {
    match std::str::from_utf8(bytes) {
        Ok(s) => Ok(s.to_owned()),
        Err(_) => {
            if let Some(pos) = bytes
                .iter()
                .position(|&b| b < 0x20 && !matches!(b, b'\t' | b'\n' | b'\r'))
            {
                return Err(Error::parse(
                    "pronouncing dictionary",
                    format!("byte {pos}"),
                    "input is neither UTF-8 nor Latin-1 text",
                ));
            }
            Ok(bytes.iter().map(|&b| b as char).collect())
        }
    }
}

/// Lexicon lookup with a vowel-group fallback for out-of-vocabulary words.
/// Always at least 1.
pub fn syllable_count(lexicon: &SyllableLexicon, word: &str) -> u32 {
    lexicon
        .get(word)
        .unwrap_or_else(|| vowel_group_count(word))
        .max(1)
}

/// Number of maximal runs of the letters a, e, i, o, u, y; minimum 1.
pub fn vowel_group_count(word: &str) -> u32 {
    let mut groups = 0;
    let mut in_group = false;
    for c in word.chars().flat_map(char::to_lowercase) {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    groups.max(1)
}
