//! Independent reference implementations and fixture builders shared by the
//! integration tests. Nothing here calls into the code it is used to check.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use cstk_core::ensemble::{InternalBase, PredictionSet, PredictionVector};
use cstk_core::harness::{make_folds, FoldPlan};
use cstk_core::ingest::{parse_conllu, ConlluToken, Sentence};
use cstk_core::{Label, WordToken};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// ---------------------------------------------------------------------------
// Hand-annotated dependency trees

/// Expected raw counts for one annotated tree, read from its `# expect`
/// comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedCounts {
    pub text: String,
    pub words: usize,
    pub clauses: usize,
    pub dependent_clauses: usize,
    pub t_units: usize,
    pub coordinate_phrases: usize,
    pub complex_nominals: usize,
}

pub fn annotated_trees() -> Vec<(Sentence, ExpectedCounts)> {
    let bytes = std::fs::read(fixture_path("annotated.conllu")).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    let mut expected = Vec::new();
    let mut current_text = String::new();
    for line in text.lines() {
        if let Some(t) = line.strip_prefix("# text = ") {
            current_text = t.to_string();
        }
        if let Some(rest) = line.strip_prefix("# expect = ") {
            let kv: BTreeMap<&str, usize> = rest
                .split_whitespace()
                .map(|p| {
                    let (k, v) = p.split_once('=').unwrap();
                    (k, v.parse().unwrap())
                })
                .collect();
            expected.push(ExpectedCounts {
                text: current_text.clone(),
                words: kv["words"],
                clauses: kv["clauses"],
                dependent_clauses: kv["dependent_clauses"],
                t_units: kv["t_units"],
                coordinate_phrases: kv["coordinate_phrases"],
                complex_nominals: kv["complex_nominals"],
            });
        }
    }
    let sentences = parse_conllu(&bytes).unwrap();
    assert_eq!(sentences.len(), expected.len());
    sentences.into_iter().zip(expected).collect()
}

// ---------------------------------------------------------------------------
// Disfluency reference

pub const FILLERS_UH: [&str; 3] = ["uh", "er", "eh"];
pub const FILLERS_UM: [&str; 3] = ["um", "hm", "uhm"];
const WORDS: [&str; 12] = [
    "boy",
    "cookie",
    "jar",
    "stool",
    "mother",
    "water",
    "sink",
    "dishes",
    "window",
    "curtain",
    "falling",
    "overflowing",
];

/// A random utterance whose times, durations and confidences are all
/// multiples of 1/64, so sums and differences are exact in binary floating
/// point. Gaps deliberately include the 0.25 s and 2.0 s boundaries.
pub fn dyadic_utterance(r: &mut ChaCha8Rng) -> Vec<WordToken> {
    let q = 1.0 / 64.0;
    let n = r.random_range(1..=25);
    let mut t = r.random_range(0..640) as f64 * q;
    let mut words = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let gap = match r.random_range(0..8) {
                0 => 0.0,
                1 => 0.25,
                2 => 2.0,
                3 => r.random_range(1..16) as f64 * q,
                4 => r.random_range(17..128) as f64 * q,
                5 => r.random_range(129..400) as f64 * q,
                _ => r.random_range(0..40) as f64 * q,
            };
            t += gap;
        }
        let text = match r.random_range(0..10) {
            0 => FILLERS_UH[r.random_range(0..3)].to_string(),
            1 => FILLERS_UM[r.random_range(0..3)].to_string(),
            2 => "Uh".to_string(),
            _ => WORDS[r.random_range(0..WORDS.len())].to_string(),
        };
        let dur = r.random_range(0..48) as f64 * q;
        let mut w = WordToken::new(text, t, t + dur, r.random_range(0..=64) as f64 * q);
        if r.random_bool(0.3) {
            w.syllables = Some(r.random_range(1..5));
        }
        words.push(w);
        t += dur;
    }
    words
}

/// Vowel-run syllable estimate, written out separately from the library.
fn syllables_by_vowels(word: &str) -> u32 {
    let lower = word.to_lowercase();
    let bytes: Vec<bool> = lower.chars().map(|c| "aeiouy".contains(c)).collect();
    let mut n = 0;
    for i in 0..bytes.len() {
        if bytes[i] && (i == 0 || !bytes[i - 1]) {
            n += 1;
        }
    }
    if n == 0 {
        1
    } else {
        n
    }
}

/// Straight-line computation of the eight per-utterance measures with the
/// default thresholds (short > 0.25 s, long > 2.0 s), no lexicon, filled
/// pauses counted in the rate.
pub fn reference_disfluency(words: &[WordToken]) -> [f64; 8] {
    let mut pause_time = 0.0;
    let mut n_long = 0.0;
    let mut n_short = 0.0;
    let mut i = 1;
    while i < words.len() {
        let mut gap = words[i].start_s - words[i - 1].end_s;
        if gap < 0.0 {
            gap = 0.0;
        }
        if gap > 0.25 {
            pause_time += gap;
            if gap > 2.0 {
                n_long += 1.0;
            } else {
                n_short += 1.0;
            }
        }
        i += 1;
    }
    let mut syllables: u32 = 0;
    let mut spoken = 0.0;
    let mut uh = 0.0;
    let mut um = 0.0;
    let mut conf = 0.0;
    for w in words {
        syllables += match w.syllables {
            Some(s) => s,
            None => syllables_by_vowels(&w.text),
        };
        spoken += w.end_s - w.start_s;
        if FILLERS_UH.contains(&w.text.as_str()) {
            uh += 1.0;
        }
        if FILLERS_UM.contains(&w.text.as_str()) {
            um += 1.0;
        }
        conf += w.confidence;
    }
    let span = words[words.len() - 1].end_s - words[0].start_s;
    let msd = spoken / syllables as f64;
    let spm = if span > 0.0 {
        syllables as f64 / (span / 60.0)
    } else {
        0.0
    };
    [
        msd,
        spm,
        pause_time,
        n_long,
        n_short,
        uh,
        um,
        conf / words.len() as f64,
    ]
}

// ---------------------------------------------------------------------------
// Vote reference

/// Tally-based majority with the documented tie-break: more hard votes wins;
/// on equal counts the larger summed probability wins; otherwise CN.
pub fn brute_force_vote(votes: &[[f64; 2]]) -> Label {
    let mut ad = 0;
    let mut cn = 0;
    let mut sum_ad = 0.0;
    let mut sum_cn = 0.0;
    for v in votes {
        if v[1] > v[0] {
            ad += 1;
        } else {
            cn += 1;
        }
        sum_cn += v[0];
        sum_ad += v[1];
    }
    if ad > cn {
        Label::Ad
    } else if cn > ad {
        Label::Cn
    } else if sum_ad > sum_cn {
        Label::Ad
    } else {
        Label::Cn
    }
}

/// A random vote list. Probabilities are multiples of 1/64 so that sums are
/// exact in any order. With `force_tie` the hard votes split evenly, and
/// half the time the probability sums tie as well.
pub fn random_votes(r: &mut ChaCha8Rng, force_tie: bool) -> Vec<[f64; 2]> {
    let q = 1.0 / 64.0;
    let mk = |k: u32| [1.0 - k as f64 * q, k as f64 * q];
    if !force_tie {
        let n = r.random_range(1..=100);
        return (0..n).map(|_| mk(r.random_range(0..=64))).collect();
    }
    let half = r.random_range(1..=50);
    let mut v = Vec::with_capacity(2 * half);
    if r.random_bool(0.5) {
        // mirrored pairs: equal counts and equal sums
        for _ in 0..half {
            let k = r.random_range(33..=64);
            v.push(mk(k));
            v.push(mk(64 - k));
        }
    } else {
        for _ in 0..half {
            v.push(mk(r.random_range(33..=64)));
            v.push(mk(r.random_range(0..=32)));
        }
    }
    // shuffle so ties are not always ordered
    for i in (1..v.len()).rev() {
        let j = r.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

// ---------------------------------------------------------------------------
// Random sentences for window properties

const UPOS: [&str; 10] = [
    "NOUN", "VERB", "ADJ", "ADV", "DET", "PRON", "ADP", "CCONJ", "INTJ", "PUNCT",
];

/// A random chain-shaped tree: token 1 is the root and every other token
/// hangs off its predecessor.
pub fn random_sentence(r: &mut ChaCha8Rng) -> Sentence {
    let n = r.random_range(1..=15);
    let tokens = (1..=n)
        .map(|id| {
            let upos = UPOS[r.random_range(0..UPOS.len())];
            let form = if upos == "PUNCT" {
                ".".to_string()
            } else if r.random_bool(0.1) {
                "42".to_string()
            } else {
                WORDS[r.random_range(0..WORDS.len())].to_string()
            };
            ConlluToken {
                id,
                lemma: form.to_lowercase(),
                form,
                upos: upos.into(),
                xpos: "_".into(),
                feats: "_".into(),
                head: id - 1,
                deprel: if id == 1 { "root".into() } else { "dep".into() },
            }
        })
        .collect();
    Sentence::new(tokens).unwrap()
}

// ---------------------------------------------------------------------------
// Complementary-oracle stacking fixture

pub struct TwoOracleFixture {
    pub labels: BTreeMap<String, Label>,
    pub plan: FoldPlan,
    pub predictions: PredictionSet,
    pub internal: Vec<InternalBase>,
    pub external_models: Vec<String>,
}

/// Speakers fall into half A and half B. `oracle1` is right with confidence
/// 0.9-0.99 on A and flips a coin with probabilities within 0.1 of 0.5 on
/// B; `oracle2` is the reverse. The two internal bases see pure noise.
/// Every external prediction is tagged with the speaker's own fold.
pub fn two_oracle_fixture(n_per_class: usize, seed: u64) -> TwoOracleFixture {
    let mut r = rng(seed);
    let mut labels = BTreeMap::new();
    for i in 0..2 * n_per_class {
        let label = if i % 2 == 0 { Label::Cn } else { Label::Ad };
        labels.insert(format!("S{i:03}"), label);
    }
    let plan = make_folds(&labels, 5, seed).unwrap();
    let mut predictions = PredictionSet::default();
    for (idx, (s, &y)) in labels.iter().enumerate() {
        let in_a = (idx / 2) % 2 == 0;
        for (model, expert) in [("oracle1", in_a), ("oracle2", !in_a)] {
            let p_true = if expert {
                r.random_range(0.9..0.99)
            } else {
                let conf = r.random_range(0.5..0.6);
                if r.random_bool(0.5) {
                    conf
                } else {
                    1.0 - conf
                }
            };
            let p_ad = if y == Label::Ad { p_true } else { 1.0 - p_true };
            predictions
                .insert(PredictionVector {
                    speaker_id: s.clone(),
                    model_id: model.into(),
                    instance_id: 0,
                    fold: plan.fold_of(s),
                    probs: [1.0 - p_ad, p_ad],
                })
                .unwrap();
        }
    }
    let internal = ["lr_comp", "lr_disfl"]
        .iter()
        .map(|m| InternalBase {
            model_id: m.to_string(),
            features: labels
                .keys()
                .map(|s| {
                    (
                        s.clone(),
                        (0..3).map(|_| r.random_range(-1.0..1.0)).collect(),
                    )
                })
                .collect(),
        })
        .collect();
    TwoOracleFixture {
        labels,
        plan,
        predictions,
        internal,
        external_models: vec!["oracle1".into(), "oracle2".into()],
    }
}

pub fn accuracy(pred: &BTreeMap<String, Label>, truth: &BTreeMap<String, Label>) -> f64 {
    let hits = pred.iter().filter(|(s, l)| truth[*s] == **l).count();
    hits as f64 / pred.len() as f64
}
