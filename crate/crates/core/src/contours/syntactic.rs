use std::collections::BTreeMap;

use crate::ingest::Sentence;

/// Base relations that open a clause below the root predicate.
const CLAUSAL: [&str; 5] = ["csubj", "ccomp", "xcomp", "advcl", "acl"];
const NOMINAL_MODIFIERS: [&str; 3] = ["amod", "nmod", "acl"];

/// Raw dependency-based counts for one sentence. Ratios over a window are
/// ratios of summed counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SyntacticCounts {
    pub sentences: usize,
    pub words: usize,
    pub clauses: usize,
    pub dependent_clauses: usize,
    pub t_units: usize,
    pub coordinate_phrases: usize,
    pub complex_nominals: usize,
}

impl std::ops::Add for SyntacticCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        SyntacticCounts {
            sentences: self.sentences + o.sentences,
            words: self.words + o.words,
            clauses: self.clauses + o.clauses,
            dependent_clauses: self.dependent_clauses + o.dependent_clauses,
            t_units: self.t_units + o.t_units,
            coordinate_phrases: self.coordinate_phrases + o.coordinate_phrases,
            complex_nominals: self.complex_nominals + o.complex_nominals,
        }
    }
}

pub fn syntactic_counts(s: &Sentence) -> SyntacticCounts {
    let root = s.root().id;
    let mut c = SyntacticCounts {
        sentences: 1,
        clauses: 1,
        t_units: 1,
        ..Default::default()
    };
    for t in s.tokens() {
        if !t.is_punct() {
            c.words += 1;
        }
        let rel = t.base_deprel();
        if CLAUSAL.contains(&rel) {
            c.clauses += 1;
        }
        if rel == "conj" {
            if t.head == root {
                c.t_units += 1;
            }
            let head = s.token(t.head).expect("validated tree");
            if !matches!(head.upos.as_str(), "VERB" | "AUX") {
                c.coordinate_phrases += 1;
            }
        }
        if t.upos == "NOUN"
            && s.dependents(t.id)
                .any(|d| NOMINAL_MODIFIERS.contains(&d.base_deprel()))
        {
            c.complex_nominals += 1;
        }
    }
    c.dependent_clauses = c.clauses - 1;
    c
}

impl SyntacticCounts {
    pub fn mean_length_clause(&self) -> Option<f64> {
        ratio(self.words, self.clauses)
    }

    pub fn mean_length_sentence(&self) -> Option<f64> {
        ratio(self.words, self.sentences)
    }

    pub fn clauses_per_sentence(&self) -> Option<f64> {
        ratio(self.clauses, self.sentences)
    }

    pub fn dependent_clauses_per_tunit(&self) -> Option<f64> {
        ratio(self.dependent_clauses, self.t_units)
    }

    pub fn coordinate_phrases_per_clause(&self) -> Option<f64> {
        ratio(self.coordinate_phrases, self.clauses)
    }

    pub fn complex_nominals_per_clause(&self) -> Option<f64> {
        ratio(self.complex_nominals, self.clauses)
    }
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

/// All syntactic ratios for a single sentence, keyed by measure name.
pub fn syntactic_measures(s: &Sentence) -> BTreeMap<&'static str, f64> {
    let c = syntactic_counts(s);
    [
        ("mean_length_clause", c.mean_length_clause()),
        ("mean_length_sentence", c.mean_length_sentence()),
        ("clauses_per_sentence", c.clauses_per_sentence()),
        (
            "dependent_clauses_per_tunit",
            c.dependent_clauses_per_tunit(),
        ),
        (
            "coordinate_phrases_per_clause",
            c.coordinate_phrases_per_clause(),
        ),
        (
            "complex_nominals_per_clause",
            c.complex_nominals_per_clause(),
        ),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.map(|v| (k, v)))
    .collect()
}
