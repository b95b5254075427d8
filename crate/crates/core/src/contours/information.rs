use std::io::Write;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::ingest::{NgramTable, Sentence};

/// Compression level for the DEFLATE ratio measures.
pub const DEFLATE_LEVEL: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextView {
    /// Space-joined word forms.
    Surface,
    /// Space-joined UPOS tags.
    Pos,
    /// Space-joined FEATS strings (`_` where a token has none).
    Morph,
}

impl TextView {
    pub fn as_str(self) -> &'static str {
        match self {
            TextView::Surface => "surface",
            TextView::Pos => "pos",
            TextView::Morph => "morph",
        }
    }
}

pub fn text_view<'a>(window: impl IntoIterator<Item = &'a Sentence>, view: TextView) -> String {
    let parts: Vec<&str> = window
        .into_iter()
        .flat_map(|s| s.tokens())
        .map(|t| match view {
            TextView::Surface => t.form.as_str(),
            TextView::Pos => t.upos.as_str(),
            TextView::Morph => t.feats.as_str(),
        })
        .collect();
    parts.join(" ")
}

/// Raw DEFLATE output size over input size. Short inputs can exceed 1.
pub fn deflate_ratio(text: &str) -> Option<f64> {
    if text.is_empty() {
        return None;
    }
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::new(DEFLATE_LEVEL));
    enc.write_all(text.as_bytes())
        .expect("writing to Vec cannot fail");
    let compressed = enc.finish().expect("writing to Vec cannot fail");
    Some(compressed.len() as f64 / text.len() as f64)
}

/// Mean log10 relative frequency of the window's n-grams, with additive
/// smoothing `k` over a vocabulary the size of the table. N-grams do not
/// cross sentence boundaries. `None` if the window has no n-gram of the
/// table's order.
pub fn ngram_logfreq<S: AsRef<str>>(
    sentences: &[Vec<S>],
    table: &NgramTable,
    k: f64,
) -> Option<f64> {
    let n = table.order();
    let denom = table.total() as f64 + k * table.vocab_size() as f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for tokens in sentences {
        if tokens.len() < n {
            continue;
        }
        for gram in tokens.windows(n) {
            let key = gram.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
            sum += ((table.lookup(&key) as f64 + k) / denom).log10();
            count += 1;
        }
    }
    (count > 0 && denom > 0.0).then(|| sum / count as f64)
}
