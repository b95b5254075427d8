use crate::ingest::{ConlluToken, Sentence, Wordlist};

const CONTENT_UPOS: [&str; 4] = ["NOUN", "VERB", "ADJ", "ADV"];

/// Non-punctuation tokens containing at least one letter, lowercased.
pub fn lexical_tokens<'a>(window: impl IntoIterator<Item = &'a Sentence>) -> Vec<String> {
    window
        .into_iter()
        .flat_map(|s| s.tokens())
        .filter(|t| is_lexical(t))
        .map(|t| t.form.to_lowercase())
        .collect()
}

pub(crate) fn is_lexical(t: &ConlluToken) -> bool {
    !t.is_punct() && t.form.chars().any(char::is_alphabetic)
}

fn types_and_tokens<S: AsRef<str>>(tokens: &[S]) -> (usize, usize) {
    let mut seen: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    seen.sort_unstable();
    seen.dedup();
    (seen.len(), tokens.len())
}

/// Type-token ratio V/N. `None` for an empty window.
pub fn ttr<S: AsRef<str>>(tokens: &[S]) -> Option<f64> {
    let (v, n) = types_and_tokens(tokens);
    (n > 0).then(|| v as f64 / n as f64)
}

/// Corrected type-token ratio V/√(2N).
pub fn cttr<S: AsRef<str>>(tokens: &[S]) -> Option<f64> {
    let (v, n) = types_and_tokens(tokens);
    (n > 0).then(|| v as f64 / (2.0 * n as f64).sqrt())
}

/// Share of NOUN/VERB/ADJ/ADV among non-punctuation tags.
pub fn lexical_density<S: AsRef<str>>(upos: &[S]) -> Option<f64> {
    let mut words = 0usize;
    let mut content = 0usize;
    for tag in upos {
        let tag = tag.as_ref();
        if tag == "PUNCT" {
            continue;
        }
        words += 1;
        if CONTENT_UPOS.contains(&tag) {
            content += 1;
        }
    }
    (words > 0).then(|| content as f64 / words as f64)
}

/// Share of tokens not found in the reference wordlist.
pub fn sophistication<S: AsRef<str>>(tokens: &[S], wordlist: &Wordlist) -> Option<f64> {
    if tokens.is_empty() {
        return None;
    }
    let off = tokens
        .iter()
        .filter(|t| !wordlist.contains(t.as_ref()))
        .count();
    Some(off as f64 / tokens.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ttr_cases() {
        let distinct: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        assert_eq!(ttr(&distinct), Some(1.0));
        assert_eq!(ttr(&["a", "a", "b", "b"]), Some(0.5));
        assert_abs_diff_eq!(cttr(&["a", "a", "b", "b"]).unwrap(), 2.0 / 8f64.sqrt());
        assert_eq!(ttr(&["x"]), Some(1.0));
        assert_abs_diff_eq!(cttr(&["x"]).unwrap(), 1.0 / 2f64.sqrt());
        assert_eq!(ttr::<&str>(&[]), None);
        assert_eq!(ttr(&["The", "the"]), Some(0.5));
    }

    #[test]
    fn density_cases() {
        assert_eq!(lexical_density(&["NOUN", "NOUN"]), Some(1.0));
        assert_abs_diff_eq!(
            lexical_density(&["DET", "NOUN", "VERB"]).unwrap(),
            2.0 / 3.0
        );
        assert_eq!(lexical_density(&["DET", "DET"]), Some(0.0));
        assert_eq!(lexical_density(&["PUNCT"]), None);
    }

    #[test]
    fn sophistication_cases() {
        let list: Wordlist = ["the", "boy", "cookie", "jar"].into_iter().collect();
        assert_eq!(sophistication(&["the", "boy"], &list), Some(0.0));
        assert_eq!(sophistication(&["xylophone", "zeal"], &list), Some(1.0));
        assert_eq!(
            sophistication(&["the", "boy", "cookie", "precariously"], &list),
            Some(0.25)
        );
    }
}
