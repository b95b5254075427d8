use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::information::{deflate_ratio, ngram_logfreq, text_view, TextView};
use super::lexical::{cttr, lexical_density, lexical_tokens, sophistication, ttr};
use super::syntactic::{syntactic_counts, SyntacticCounts};
use super::WindowConfig;
use crate::error::{Error, Result};
use crate::ingest::{load_ngram_table, load_wordlist, NgramTable, Sentence, Wordlist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Category {
    Syntactic,
    Lexical,
    NgramFreq,
    InfoTheoretic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasureId {
    pub category: Category,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntacticMeasure {
    MeanLengthClause,
    MeanLengthSentence,
    ClausesPerSentence,
    DependentClausesPerTunit,
    CoordinatePhrasesPerClause,
    ComplexNominalsPerClause,
}

impl SyntacticMeasure {
    pub const ALL: [SyntacticMeasure; 6] = [
        SyntacticMeasure::MeanLengthClause,
        SyntacticMeasure::MeanLengthSentence,
        SyntacticMeasure::ClausesPerSentence,
        SyntacticMeasure::DependentClausesPerTunit,
        SyntacticMeasure::CoordinatePhrasesPerClause,
        SyntacticMeasure::ComplexNominalsPerClause,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntacticMeasure::MeanLengthClause => "mean_length_clause",
            SyntacticMeasure::MeanLengthSentence => "mean_length_sentence",
            SyntacticMeasure::ClausesPerSentence => "clauses_per_sentence",
            SyntacticMeasure::DependentClausesPerTunit => "dependent_clauses_per_tunit",
            SyntacticMeasure::CoordinatePhrasesPerClause => "coordinate_phrases_per_clause",
            SyntacticMeasure::ComplexNominalsPerClause => "complex_nominals_per_clause",
        }
    }

    fn eval(self, c: &SyntacticCounts) -> Option<f64> {
        match self {
            SyntacticMeasure::MeanLengthClause => c.mean_length_clause(),
            SyntacticMeasure::MeanLengthSentence => c.mean_length_sentence(),
            SyntacticMeasure::ClausesPerSentence => c.clauses_per_sentence(),
            SyntacticMeasure::DependentClausesPerTunit => c.dependent_clauses_per_tunit(),
            SyntacticMeasure::CoordinatePhrasesPerClause => c.coordinate_phrases_per_clause(),
            SyntacticMeasure::ComplexNominalsPerClause => c.complex_nominals_per_clause(),
        }
    }
}

/// A complexity measure bound to any resources it needs.
#[derive(Debug, Clone)]
pub enum Measure {
    Syntactic(SyntacticMeasure),
    Ttr,
    Cttr,
    LexicalDensity,
    Sophistication(Arc<Wordlist>),
    NgramLogFreq(Arc<NgramTable>),
    Kolmogorov(TextView),
}

impl Measure {
    pub fn id(&self) -> MeasureId {
        let (category, name) = match self {
            Measure::Syntactic(m) => (Category::Syntactic, m.name().to_owned()),
            Measure::Ttr => (Category::Lexical, "ttr".to_owned()),
            Measure::Cttr => (Category::Lexical, "cttr".to_owned()),
            Measure::LexicalDensity => (Category::Lexical, "lexical_density".to_owned()),
            Measure::Sophistication(_) => (Category::Lexical, "sophistication".to_owned()),
            Measure::NgramLogFreq(t) => (
                Category::NgramFreq,
                format!("ngram_logfreq.{}.{}", t.register(), t.order()),
            ),
            Measure::Kolmogorov(v) => (
                Category::InfoTheoretic,
                format!("kolmogorov.{}", v.as_str()),
            ),
        };
        MeasureId { category, name }
    }

    /// Value over one window, or `None` when the window is degenerate for
    /// this measure.
    pub fn eval(&self, window: &[Sentence], cfg: &WindowConfig) -> Option<f64> {
        match self {
            Measure::Syntactic(m) => {
                let counts = window
                    .iter()
                    .map(syntactic_counts)
                    .fold(SyntacticCounts::default(), |a, b| a + b);
                m.eval(&counts)
            }
            Measure::Ttr => ttr(&lexical_tokens(window)),
            Measure::Cttr => cttr(&lexical_tokens(window)),
            Measure::LexicalDensity => {
                let tags: Vec<&str> = window
                    .iter()
                    .flat_map(|s| s.tokens())
                    .map(|t| t.upos.as_str())
                    .collect();
                lexical_density(&tags)
            }
            Measure::Sophistication(list) => sophistication(&lexical_tokens(window), list),
            Measure::NgramLogFreq(table) => {
                let per_sentence: Vec<Vec<String>> =
                    window.iter().map(|s| lexical_tokens([s])).collect();
                ngram_logfreq(&per_sentence, table, cfg.smoothing)
            }
            Measure::Kolmogorov(view) => deflate_ratio(&text_view(window, *view)),
        }
    }
}

/// One entry of a registry file. Resource paths are relative to the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "snake_case", deny_unknown_fields)]
enum Entry {
    MeanLengthClause {},
    MeanLengthSentence {},
    ClausesPerSentence {},
    DependentClausesPerTunit {},
    CoordinatePhrasesPerClause {},
    ComplexNominalsPerClause {},
    Ttr {},
    Cttr {},
    LexicalDensity {},
    Sophistication {
        wordlist: PathBuf,
    },
    NgramLogfreq {
        table: PathBuf,
        n: usize,
        register: String,
    },
    Kolmogorov {
        view: TextView,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    measures: Vec<Entry>,
}

/// Ordered set of measures; column order of every contour follows it.
#[derive(Debug, Clone)]
pub struct Registry {
    measures: Vec<Measure>,
}

impl Registry {
    pub fn new(measures: Vec<Measure>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::Config("measure registry is empty".into()));
        }
        let mut seen = HashSet::new();
        for m in &measures {
            let id = m.id();
            if !seen.insert(id.name.clone()) {
                return Err(Error::Config(format!("duplicate measure {:?}", id.name)));
            }
        }
        Ok(Registry { measures })
    }

    /// The measures that need no external resources: six syntactic, three
    /// lexical, three DEFLATE views.
    pub fn builtin() -> Self {
        let mut m: Vec<Measure> = SyntacticMeasure::ALL
            .iter()
            .map(|s| Measure::Syntactic(*s))
            .collect();
        m.extend([Measure::Ttr, Measure::Cttr, Measure::LexicalDensity]);
        m.extend([TextView::Surface, TextView::Pos, TextView::Morph].map(Measure::Kolmogorov));
        Registry { measures: m }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn from_json(json: &[u8], base_dir: &Path) -> Result<Self> {
        let file: RegistryFile = serde_json::from_slice(json)
            .map_err(|e| Error::Config(format!("measure registry: {e}")))?;
        let read = |p: &Path| -> Result<Vec<u8>> {
            let full = base_dir.join(p);
            std::fs::read(&full).map_err(|e| Error::io(full, e))
        };
        let mut measures = Vec::with_capacity(file.measures.len());
        for entry in file.measures {
            let m = match entry {
                Entry::MeanLengthClause {} => {
                    Measure::Syntactic(SyntacticMeasure::MeanLengthClause)
                }
                Entry::MeanLengthSentence {} => {
                    Measure::Syntactic(SyntacticMeasure::MeanLengthSentence)
                }
                Entry::ClausesPerSentence {} => {
                    Measure::Syntactic(SyntacticMeasure::ClausesPerSentence)
                }
                Entry::DependentClausesPerTunit {} => {
                    Measure::Syntactic(SyntacticMeasure::DependentClausesPerTunit)
                }
                Entry::CoordinatePhrasesPerClause {} => {
                    Measure::Syntactic(SyntacticMeasure::CoordinatePhrasesPerClause)
                }
                Entry::ComplexNominalsPerClause {} => {
                    Measure::Syntactic(SyntacticMeasure::ComplexNominalsPerClause)
                }
                Entry::Ttr {} => Measure::Ttr,
                Entry::Cttr {} => Measure::Cttr,
                Entry::LexicalDensity {} => Measure::LexicalDensity,
                Entry::Sophistication { wordlist } => {
                    Measure::Sophistication(Arc::new(load_wordlist(&read(&wordlist)?)?))
                }
                Entry::NgramLogfreq { table, n, register } => {
                    Measure::NgramLogFreq(Arc::new(load_ngram_table(&read(&table)?, n, &register)?))
                }
                Entry::Kolmogorov { view } => Measure::Kolmogorov(view),
            };
            measures.push(m);
        }
        Registry::new(measures)
    }

    /// Reorders/subsets the registry by measure name.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let picked = names
            .iter()
            .map(|n| {
                self.measures
                    .iter()
                    .find(|m| m.id().name == *n)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("unknown measure {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Registry::new(picked)
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn names(&self) -> Vec<String> {
        self.measures.iter().map(|m| m.id().name).collect()
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_unique_and_spans_categories() {
        let r = Registry::builtin();
        let ids: Vec<MeasureId> = r.measures().iter().map(Measure::id).collect();
        let names: HashSet<_> = ids.iter().map(|i| &i.name).collect();
        assert_eq!(names.len(), ids.len());
        assert!(ids.iter().any(|i| i.category == Category::InfoTheoretic));
        assert!(ids.iter().any(|i| i.category == Category::Lexical));
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(Registry::new(vec![Measure::Ttr, Measure::Ttr]).is_err());
        assert!(Registry::new(vec![]).is_err());
    }

    #[test]
    fn loads_resources_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("words.txt"), "the\nboy\n").unwrap();
        std::fs::write(dir.path().join("bi.tsv"), "the boy\t10\n").unwrap();
        let json = br#"{"measures": [
            {"measure": "ttr"},
            {"measure": "sophistication", "wordlist": "words.txt"},
            {"measure": "ngram_logfreq", "table": "bi.tsv", "n": 2, "register": "spoken"},
            {"measure": "kolmogorov", "view": "pos"},
            {"measure": "clauses_per_sentence"}
        ]}"#;
        let r = Registry::from_json(json, dir.path()).unwrap();
        assert_eq!(
            r.names(),
            [
                "ttr",
                "sophistication",
                "ngram_logfreq.spoken.2",
                "kolmogorov.pos",
                "clauses_per_sentence"
            ]
        );
        assert_eq!(r.measures()[2].id().category, Category::NgramFreq);
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = br#"{"measures": [{"measure": "ttr", "window": 3}]}"#;
        assert!(Registry::from_json(json, Path::new(".")).is_err());
        let json = br#"{"measures": [{"measure": "yngve_depth"}]}"#;
        assert!(Registry::from_json(json, Path::new(".")).is_err());
    }
}
