use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

use super::folds::{make_folds, FoldPlan};
use super::write_atomic;
use crate::ensemble::{EmbeddingSet, ExternalEmbedding, PredictionSet, PredictionVector};
use crate::error::{Error, Result};
use crate::ingest::{
    to_asr_json, vowel_group_count, ConlluToken, Label, Sentence, SessionRecord, Utterance,
    WordToken,
};
use crate::rng::{self, ChaCha8Rng};

/// Per-utterance (dis)fluency statistics by class: AD mean, AD SD, CN mean,
/// CN SD, in [`crate::disfluency::DisfluencyVector::NAMES`] order.
pub const TABLE1: [(f64, f64, f64, f64); 8] = [
    (0.28, 0.05, 0.26, 0.03),
    (205.0, 45.7, 224.0, 35.7),
    (0.92, 0.89, 0.63, 0.49),
    (1.28, 2.22, 0.473, 0.71),
    (13.2, 9.28, 15.4, 11.7),
    (0.29, 0.88, 0.24, 0.54),
    (0.07, 0.37, 0.31, 0.74),
    (0.83, 0.09, 0.86, 0.08),
];

const LONG_PAUSE_MIN: f64 = 2.05;
const LONG_PAUSE_MAX: f64 = 6.0;
const SHORT_PAUSE_MIN: f64 = 0.30;
const SHORT_PAUSE_MAX: f64 = 2.0;
const MICRO_GAP_MAX: f64 = 0.12;

/// Class-dependent sentence-construction rates (CN value, AD value).
const SYNTAX_RATES: [(f64, f64); 6] = [
    (0.45, 0.25), // adjective on a noun phrase
    (0.35, 0.15), // subordinate clause
    (0.25, 0.12), // coordinated noun phrase
    (0.30, 0.20), // coordinated clause
    (0.20, 0.08), // relative clause
    (0.05, 0.25), // vague noun
];

const SUBJECTS: &[&str] = &[
    "boy", "girl", "mother", "woman", "lady", "kid", "sister", "brother",
];
const OBJECTS: &[&str] = &[
    "cookie", "jar", "plate", "dish", "cup", "towel", "water", "curtain", "window", "stool",
    "sink", "cupboard", "apron", "faucet", "lid",
];
const PLACES: &[&str] = &["kitchen", "floor", "stool", "window", "counter", "garden"];
const ADJECTIVES: &[&str] = &[
    "little", "tall", "big", "dirty", "wet", "open", "full", "young", "wooden", "slippery",
];
const TRANSITIVE: &[&str] = &[
    "taking", "washing", "drying", "holding", "grabbing", "getting", "handing", "reaching",
];
const INTRANSITIVE: &[&str] = &[
    "falling",
    "standing",
    "overflowing",
    "laughing",
    "waiting",
    "looking",
];
const SUBORDINATORS: &[&str] = &["while", "because", "when"];
const VAGUE: &[&str] = &["thing", "stuff"];
const PREPOSITIONS: &[&str] = &["on", "in", "near"];

/// Words counted as everyday vocabulary by the sophistication measure.
const COMMON: &[&str] = &[
    "the", "a", "is", "and", "who", "on", "in", "near", "while", "because", "when", "boy", "girl",
    "mother", "woman", "kid", "water", "cup", "plate", "window", "floor", "thing", "stuff",
    "little", "big", "wet", "open", "taking", "holding", "getting", "looking", "falling",
    "standing", "uh", "um",
];

/// Everything a synthetic dataset consists of.
pub struct SynthFixture {
    pub n_per_class: usize,
    pub separation: f64,
    pub seed: u64,
    pub sessions: Vec<SessionRecord>,
    pub transcripts: BTreeMap<String, Vec<Sentence>>,
    pub labels: BTreeMap<String, Label>,
    pub lexicon: BTreeMap<String, u32>,
    pub ngram_tables: Vec<(usize, BTreeMap<String, u64>)>,
    /// Fold plan (k = 5) that the external predictions are out-of-fold for;
    /// absent when a class has fewer than 5 speakers.
    pub fold_plan: Option<FoldPlan>,
    pub predictions: PredictionSet,
    pub embeddings: EmbeddingSet,
}

pub const SYNTH_K: usize = 5;
pub const SYNTH_EXTERNAL_INSTANCES: usize = 5;
pub const SYNTH_EMBEDDING_DIM: usize = 16;

fn pull(mid: f64, value: f64, separation: f64) -> f64 {
    mid + separation * (value - mid)
}

/// Class means pulled apart from the midpoint by `separation`; both classes
/// share the average of the two class SDs so that separation 0 gives
/// identical distributions.
fn disfluency_params(label: Label, separation: f64) -> [(f64, f64); 8] {
    TABLE1.map(|(ad_m, ad_sd, cn_m, cn_sd)| {
        let mid = 0.5 * (ad_m + cn_m);
        let own = if label == Label::Ad { ad_m } else { cn_m };
        (pull(mid, own, separation), 0.5 * (ad_sd + cn_sd))
    })
}

fn syntax_rates(label: Label, separation: f64) -> [f64; 6] {
    SYNTAX_RATES.map(|(cn, ad)| {
        let mid = 0.5 * (cn + ad);
        let own = if label == Label::Ad { ad } else { cn };
        pull(mid, own, separation).clamp(0.0, 0.95)
    })
}

struct Tok {
    form: String,
    upos: &'static str,
    feats: &'static str,
    deprel: &'static str,
    head: Option<usize>,
}

#[derive(Default)]
struct Builder {
    toks: Vec<Tok>,
}

impl Builder {
    fn add(
        &mut self,
        form: &str,
        upos: &'static str,
        feats: &'static str,
        deprel: &'static str,
    ) -> usize {
        self.toks.push(Tok {
            form: form.to_string(),
            upos,
            feats,
            deprel,
            head: None,
        });
        self.toks.len() - 1
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.toks[dep].head = Some(head);
    }

    fn noun_phrase(
        &mut self,
        r: &mut ChaCha8Rng,
        rates: &[f64; 6],
        nouns: &[&str],
        deprel: &'static str,
    ) -> usize {
        let det = if r.random_bool(0.7) { "the" } else { "a" };
        let d = self.add(det, "DET", "Definite=Def|PronType=Art", "det");
        let adj = r.random_bool(rates[0]).then(|| {
            let w = ADJECTIVES.choose(r).expect("non-empty");
            self.add(w, "ADJ", "Degree=Pos", "amod")
        });
        let word = if r.random_bool(rates[5]) {
            VAGUE.choose(r).expect("non-empty")
        } else {
            nouns.choose(r).expect("non-empty")
        };
        let n = self.add(word, "NOUN", "Number=Sing", deprel);
        self.attach(d, n);
        if let Some(a) = adj {
            self.attach(a, n);
        }
        if r.random_bool(rates[2]) {
            let cc = self.add("and", "CCONJ", "_", "cc");
            let d2 = self.add("the", "DET", "Definite=Def|PronType=Art", "det");
            let n2 = self.add(
                OBJECTS.choose(r).expect("non-empty"),
                "NOUN",
                "Number=Sing",
                "conj",
            );
            self.attach(cc, n2);
            self.attach(d2, n2);
            self.attach(n2, n);
        }
        n
    }

    /// Subject, auxiliary, participle and its complements; returns the verb.
    fn clause(&mut self, r: &mut ChaCha8Rng, rates: &[f64; 6], depth: usize) -> usize {
        let subj = self.noun_phrase(r, rates, SUBJECTS, "nsubj");
        let aux = self.add(
            "is",
            "AUX",
            "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin",
            "aux",
        );
        let transitive = r.random_bool(0.65);
        let lemma = if transitive {
            TRANSITIVE.choose(r).expect("non-empty")
        } else {
            INTRANSITIVE.choose(r).expect("non-empty")
        };
        let v = self.add(lemma, "VERB", "Tense=Pres|VerbForm=Part", "root");
        self.attach(subj, v);
        self.attach(aux, v);
        if transitive {
            let obj = self.noun_phrase(r, rates, OBJECTS, "obj");
            self.attach(obj, v);
            if depth == 0 && r.random_bool(rates[4]) {
                let who = self.add("who", "PRON", "PronType=Rel", "nsubj");
                let aux2 = self.add(
                    "is",
                    "AUX",
                    "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin",
                    "aux",
                );
                let rv = self.add(
                    INTRANSITIVE.choose(r).expect("non-empty"),
                    "VERB",
                    "Tense=Pres|VerbForm=Part",
                    "acl:relcl",
                );
                self.attach(who, rv);
                self.attach(aux2, rv);
                self.attach(rv, obj);
            }
        } else {
            let case = self.add(
                PREPOSITIONS.choose(r).expect("non-empty"),
                "ADP",
                "_",
                "case",
            );
            let d = self.add("the", "DET", "Definite=Def|PronType=Art", "det");
            let n = self.add(
                PLACES.choose(r).expect("non-empty"),
                "NOUN",
                "Number=Sing",
                "obl",
            );
            self.attach(case, n);
            self.attach(d, n);
            self.attach(n, v);
        }
        v
    }
}

/// One picture-description sentence with `n_uh` + `n_um` filled pauses
/// spliced in as interjections.
fn sentence(r: &mut ChaCha8Rng, rates: &[f64; 6], n_uh: usize, n_um: usize) -> Result<Sentence> {
    let mut b = Builder::default();
    let root = b.clause(r, rates, 0);
    if r.random_bool(rates[1]) {
        let mark = b.add(
            SUBORDINATORS.choose(r).expect("non-empty"),
            "SCONJ",
            "_",
            "mark",
        );
        let sv = b.clause(r, rates, 1);
        b.toks[sv].deprel = "advcl";
        b.attach(mark, sv);
        b.attach(sv, root);
    }
    if r.random_bool(rates[3]) {
        let cc = b.add("and", "CCONJ", "_", "cc");
        let cv = b.clause(r, rates, 1);
        b.toks[cv].deprel = "conj";
        b.attach(cc, cv);
        b.attach(cv, root);
    }
    let mut order: Vec<usize> = (0..b.toks.len()).collect();
    for form in std::iter::repeat_n("uh", n_uh).chain(std::iter::repeat_n("um", n_um)) {
        let f = b.add(form, "INTJ", "_", "discourse");
        b.attach(f, root);
        let at = r.random_range(0..=order.len());
        order.insert(at, f);
    }
    let p = b.add(".", "PUNCT", "_", "punct");
    b.attach(p, root);
    order.push(p);

    let mut position = vec![0usize; b.toks.len()];
    for (i, &t) in order.iter().enumerate() {
        position[t] = i + 1;
    }
    let tokens = order
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let tok = &b.toks[t];
            ConlluToken {
                id: i + 1,
                form: tok.form.clone(),
                lemma: tok.form.clone(),
                upos: tok.upos.to_string(),
                xpos: "_".into(),
                feats: tok.feats.to_string(),
                head: tok.head.map_or(0, |h| position[h]),
                deprel: tok.deprel.to_string(),
            }
        })
        .collect();
    Sentence::new(tokens)
}

fn count(r: &mut ChaCha8Rng, (mean, sd): (f64, f64)) -> usize {
    let v = Normal::new(mean, sd).expect("finite sd").sample(r);
    v.max(0.0).round() as usize
}

/// Word timings for one utterance. Word durations realise the drawn mean
/// syllable duration exactly; pauses realise the drawn long/short counts and,
/// as far as those counts allow, the drawn total pause time. The speaking
/// rate follows from the resulting span.
#[allow(clippy::too_many_arguments)]
fn timings(
    r: &mut ChaCha8Rng,
    words: &[(String, u32)],
    start: f64,
    msd: f64,
    pause_time: f64,
    n_long: usize,
    n_short: usize,
    confidence: f64,
) -> Result<Vec<WordToken>> {
    let gaps_available = words.len().saturating_sub(1);
    let n_long = n_long.min(gaps_available);
    let n_short = n_short.min(gaps_available - n_long);
    let mut kinds = vec![0u8; gaps_available];
    kinds[..n_long].iter_mut().for_each(|k| *k = 2);
    kinds[n_long..n_long + n_short]
        .iter_mut()
        .for_each(|k| *k = 1);
    kinds.shuffle(r);

    let base = n_long as f64 * LONG_PAUSE_MIN + n_short as f64 * SHORT_PAUSE_MIN;
    let room = n_long as f64 * (LONG_PAUSE_MAX - LONG_PAUSE_MIN)
        + n_short as f64 * (SHORT_PAUSE_MAX - SHORT_PAUSE_MIN);
    let share = if room > 0.0 {
        ((pause_time - base) / room).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let gaps: Vec<f64> = kinds
        .iter()
        .map(|k| match k {
            2 => LONG_PAUSE_MIN + share * (LONG_PAUSE_MAX - LONG_PAUSE_MIN),
            1 => SHORT_PAUSE_MIN + share * (SHORT_PAUSE_MAX - SHORT_PAUSE_MIN),
            _ => r.random_range(0.0..MICRO_GAP_MAX),
        })
        .collect();

    let syllables: u32 = words.iter().map(|w| w.1).sum();
    let raw: Vec<f64> = words
        .iter()
        .map(|w| w.1 as f64 * r.random_range(0.8..1.2))
        .collect();
    let scale = msd * syllables as f64 / raw.iter().sum::<f64>();
    let conf_noise = Normal::new(0.0, 0.03).expect("finite sd");

    let mut t = start;
    let mut out = Vec::with_capacity(words.len());
    for (i, ((text, syl), d)) in words.iter().zip(&raw).enumerate() {
        let end = t + d * scale;
        let c = (confidence + conf_noise.sample(r)).clamp(0.0, 1.0);
        let mut w = WordToken::new(text.clone(), t, end, c);
        w.syllables = Some(*syl);
        out.push(w);
        t = end + gaps.get(i).copied().unwrap_or(0.0);
    }
    Ok(out)
}

fn syllables_of(word: &str) -> u32 {
    vowel_group_count(word)
}

fn speaker(
    r: &mut ChaCha8Rng,
    id: &str,
    label: Label,
    separation: f64,
) -> Result<(SessionRecord, Vec<Sentence>)> {
    let params = disfluency_params(label, separation);
    let rates = syntax_rates(label, separation);
    let n_utt = r.random_range(8..=14);
    let mut utterances = Vec::with_capacity(n_utt);
    let mut sentences = Vec::with_capacity(n_utt);
    let mut clock = r.random_range(0.5..2.0);
    for idx in 0..n_utt {
        let draw = |r: &mut ChaCha8Rng, (m, sd): (f64, f64)| {
            Normal::new(m, sd).expect("finite sd").sample(r)
        };
        let msd = draw(r, params[0]).max(0.08);
        let pause_time = draw(r, params[2]).max(0.0);
        let n_long = count(r, params[3]);
        let n_short = count(r, params[4]);
        let n_uh = count(r, params[5]);
        let n_um = count(r, params[6]);
        let confidence = draw(r, params[7]).clamp(0.05, 1.0);

        let s = sentence(r, &rates, n_uh, n_um)?;
        let words: Vec<(String, u32)> = s
            .tokens()
            .iter()
            .filter(|t| !t.is_punct())
            .map(|t| (t.form.to_lowercase(), syllables_of(&t.form)))
            .collect();
        let toks = timings(
            r, &words, clock, msd, pause_time, n_long, n_short, confidence,
        )?;
        clock = toks.last().expect("sentence has words").end_s + r.random_range(1.0..2.5);
        utterances.push(Utterance::new(idx, toks)?);
        sentences.push(s);
    }
    Ok((SessionRecord::new(id, Some(label), utterances)?, sentences))
}

fn vocabulary() -> Vec<&'static str> {
    let mut v: Vec<&str> = [
        SUBJECTS,
        OBJECTS,
        PLACES,
        ADJECTIVES,
        TRANSITIVE,
        INTRANSITIVE,
        SUBORDINATORS,
        VAGUE,
        PREPOSITIONS,
    ]
    .concat();
    v.extend(["the", "a", "is", "and", "who", "uh", "um"]);
    v.sort_unstable();
    v.dedup();
    v
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn external_outputs(
    seed: u64,
    labels: &BTreeMap<String, Label>,
    plan: &FoldPlan,
    separation: f64,
) -> Result<(PredictionSet, EmbeddingSet)> {
    let mut preds = PredictionSet::default();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    for (m, model) in ["ernie", "bert"].iter().enumerate() {
        let mut r = rng::derive(seed, 20 + m as u64);
        for (s, l) in labels {
            let sign = if *l == Label::Ad { 1.0 } else { -1.0 };
            let latent = sign * 0.6 * separation + std.sample(&mut r);
            for i in 0..SYNTH_EXTERNAL_INSTANCES {
                let p = sigmoid(latent + 0.5 * std.sample(&mut r));
                preds.insert(PredictionVector {
                    speaker_id: s.clone(),
                    model_id: model.to_string(),
                    instance_id: i as u32,
                    fold: plan.fold_of(s),
                    probs: [1.0 - p, p],
                })?;
            }
        }
    }
    let mut r = rng::derive(seed, 30);
    let direction: Vec<f64> = {
        let v: Vec<f64> = (0..SYNTH_EMBEDDING_DIM)
            .map(|_| std.sample(&mut r))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    };
    let mut emb = EmbeddingSet::default();
    for (s, l) in labels {
        let sign = if *l == Label::Ad { 1.0 } else { -1.0 };
        let vector = direction
            .iter()
            .map(|d| sign * 0.5 * separation * d + std.sample(&mut r))
            .collect();
        emb.insert(ExternalEmbedding {
            speaker_id: s.clone(),
            model_id: "ernie".into(),
            vector,
        })?;
    }
    Ok((preds, emb))
}

/// Generates `n_per_class` speakers per class. Class means of every
/// (dis)fluency measure sit at the Table-1 values when `separation` is 1,
/// coincide at 0, and move apart linearly beyond; sentence-construction
/// rates follow the same rule.
pub fn synth_fixture(n_per_class: usize, separation: f64, seed: u64) -> Result<SynthFixture> {
    if n_per_class == 0 {
        return Err(Error::Config("n_per_class must be at least 1".into()));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::Config(format!(
            "separation must be a non-negative number, got {separation}"
        )));
    }
    let mut order: Vec<Label> = std::iter::repeat_n(Label::Cn, n_per_class)
        .chain(std::iter::repeat_n(Label::Ad, n_per_class))
        .collect();
    order.shuffle(&mut rng::derive(seed, 1));

    let mut sessions = Vec::new();
    let mut transcripts = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for (i, &label) in order.iter().enumerate() {
        let id = format!("S{:03}", i + 1);
        let mut r = rng::derive(seed, 1000 + i as u64);
        let (session, sents) = speaker(&mut r, &id, label, separation)?;
        sessions.push(session);
        transcripts.insert(id.clone(), sents);
        labels.insert(id, label);
    }

    let lexicon = vocabulary()
        .into_iter()
        .map(|w| (w.to_string(), syllables_of(w)))
        .collect();

    let mut r = rng::derive(seed, 7);
    let mid_rates = syntax_rates(Label::Cn, 0.0);
    let mut unigrams = BTreeMap::new();
    let mut bigrams = BTreeMap::new();
    for _ in 0..400 {
        let s = sentence(&mut r, &mid_rates, 0, 0)?;
        let words: Vec<String> = s
            .tokens()
            .iter()
            .filter(|t| !t.is_punct())
            .map(|t| t.form.to_lowercase())
            .collect();
        for w in &words {
            *unigrams.entry(w.clone()).or_insert(0u64) += 1;
        }
        for p in words.windows(2) {
            *bigrams.entry(format!("{} {}", p[0], p[1])).or_insert(0u64) += 1;
        }
    }

    let fold_plan = make_folds(&labels, SYNTH_K, seed).ok();
    let (predictions, embeddings) = match &fold_plan {
        Some(plan) => external_outputs(seed, &labels, plan, separation)?,
        None => Default::default(),
    };

    Ok(SynthFixture {
        n_per_class,
        separation,
        seed,
        sessions,
        transcripts,
        labels,
        lexicon,
        ngram_tables: vec![(1, unigrams), (2, bigrams)],
        fold_plan,
        predictions,
        embeddings,
    })
}

fn pronunciation(word: &str, syllables: u32) -> String {
    let mut p = String::new();
    for i in 0..syllables {
        if i > 0 {
            p.push(' ');
        }
        p.push_str(if i == 0 { "K AH1" } else { "T AH0" });
    }
    format!("{}  {p}", word.to_uppercase())
}

impl SynthFixture {
    /// Writes the dataset tree plus a ready-to-run `experiment.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mk = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p, e));
        mk(&dir.join("sessions"))?;
        mk(&dir.join("transcripts"))?;
        for s in &self.sessions {
            let mut json = to_asr_json(s);
            json.push('\n');
            write_atomic(
                &dir.join("sessions").join(format!("{}.json", s.speaker_id)),
                json.as_bytes(),
            )?;
        }
        for (id, sents) in &self.transcripts {
            let text: String = sents
                .iter()
                .enumerate()
                .map(|(i, s)| format!("# sent_id = {id}-{}\n{}\n", i + 1, s.to_conllu()))
                .collect();
            write_atomic(
                &dir.join("transcripts").join(format!("{id}.conllu")),
                text.as_bytes(),
            )?;
        }
        let mut labels = String::from("speaker_id,label\n");
        for (s, l) in &self.labels {
            let _ = writeln!(labels, "{s},{l}");
        }
        write_atomic(&dir.join("labels.csv"), labels.as_bytes())?;

        let mut dict = String::from(";;; synthetic pronouncing dictionary\n");
        for (w, n) in &self.lexicon {
            let _ = writeln!(dict, "{}", pronunciation(w, *n));
        }
        write_atomic(&dir.join("cmudict.txt"), dict.as_bytes())?;
        let mut common = String::from("# everyday vocabulary\n");
        for w in COMMON {
            let _ = writeln!(common, "{w}");
        }
        write_atomic(&dir.join("wordlist.txt"), common.as_bytes())?;
        let mut measures: Vec<serde_json::Value> = [
            "mean_length_clause",
            "mean_length_sentence",
            "clauses_per_sentence",
            "dependent_clauses_per_tunit",
            "coordinate_phrases_per_clause",
            "complex_nominals_per_clause",
            "ttr",
            "cttr",
            "lexical_density",
        ]
        .iter()
        .map(|m| json!({ "measure": m }))
        .collect();
        measures.push(json!({"measure": "sophistication", "wordlist": "wordlist.txt"}));
        for (n, table) in &self.ngram_tables {
            let file = format!("ngram_spoken_{n}.tsv");
            let text: String = table.iter().map(|(g, c)| format!("{g}\t{c}\n")).collect();
            write_atomic(&dir.join(&file), text.as_bytes())?;
            measures.push(
                json!({"measure": "ngram_logfreq", "table": file, "n": n, "register": "spoken"}),
            );
        }
        for view in ["surface", "pos", "morph"] {
            measures.push(json!({"measure": "kolmogorov", "view": view}));
        }
        write_atomic(
            &dir.join("registry.json"),
            pretty(&json!({ "measures": measures })).as_bytes(),
        )?;

        let mut models = vec!["cnn", "lr_comp", "lr_disfl"];
        let mut external = serde_json::Value::Null;
        if let Some(plan) = &self.fold_plan {
            write_atomic(&dir.join("fold_plan.json"), plan.to_json().as_bytes())?;
            mk(&dir.join("external"))?;
            write_atomic(
                &dir.join("external/predictions.jsonl"),
                self.predictions.to_jsonl().as_bytes(),
            )?;
            write_atomic(
                &dir.join("external/embeddings.jsonl"),
                self.embeddings.to_jsonl().as_bytes(),
            )?;
            models.extend(["model_a", "model_b", "model_c"]);
            external = json!({
                "predictions": ["external/predictions.jsonl"],
                "embeddings": "external/embeddings.jsonl",
                "vote_model": "ernie",
                "fusion_model": "ernie",
                "stack_models": ["ernie", "bert"],
            });
        }
        let mut experiment = json!({
            "dataset": {"root": ".", "lexicon": "cmudict.txt", "registry": "registry.json"},
            "output_dir": "results",
            "k": SYNTH_K,
            "fold_seed": self.seed,
            "models": models,
            "train": {"seed": self.seed},
            "bag": {"n_instances": 5, "base_seed": self.seed},
            "stack": {"seed": self.seed},
        });
        if !external.is_null() {
            experiment["external"] = external;
            experiment["fold_plan"] = json!("fold_plan.json");
        }
        write_atomic(&dir.join("experiment.json"), pretty(&experiment).as_bytes())?;
        Ok(())
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disfluency::{pause_features, PauseConfig};

    #[test]
    fn deterministic_and_well_formed() {
        let a = synth_fixture(3, 1.0, 5).unwrap();
        let b = synth_fixture(3, 1.0, 5).unwrap();
        assert_eq!(a.sessions, b.sessions);
        assert_eq!(a.labels.values().filter(|l| **l == Label::Ad).count(), 3);
        for s in &a.sessions {
            assert_eq!(a.transcripts[&s.speaker_id].len(), s.utterances().len());
        }
        assert!(a.fold_plan.is_none());
    }

    #[test]
    fn separation_zero_shares_parameters() {
        assert_eq!(
            disfluency_params(Label::Ad, 0.0),
            disfluency_params(Label::Cn, 0.0)
        );
        assert_eq!(syntax_rates(Label::Ad, 0.0), syntax_rates(Label::Cn, 0.0));
        let p = disfluency_params(Label::Ad, 1.0);
        assert!((p[1].0 - 205.0).abs() < 1e-9);
        assert!((disfluency_params(Label::Cn, 1.0)[7].0 - 0.86).abs() < 1e-12);
    }

    #[test]
    fn timings_realise_pause_counts() {
        let mut r = rng::seeded(3);
        let words: Vec<(String, u32)> = (0..10).map(|i| (format!("w{i}a"), 1)).collect();
        let toks = timings(&mut r, &words, 1.0, 0.25, 3.0, 1, 2, 0.9).unwrap();
        let u = Utterance::new(0, toks).unwrap();
        let f = pause_features(&u, &PauseConfig::default());
        assert_eq!((f.n_long, f.n_short), (1, 2));
        assert!((f.pause_time - 3.0).abs() < 1e-9);
    }
}
