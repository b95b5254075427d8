//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use cstk_core::contours::{
    deflate_ratio, lexical_density, lexical_tokens, sophistication, syntactic_counts,
    syntactic_measures, ttr,
};
use cstk_core::disfluency::{disfluency_vector, PauseConfig};
use cstk_core::ensemble::{
    audit_stack, hard_vote, majority_vote, stack_fit, stack_predict, StackConfig, VoteTable,
};
use cstk_core::harness::{
    load_experiment_config, make_folds, run_experiment, synth_fixture, ModelKind,
};
use cstk_core::ingest::{load_wordlist, SyllableLexicon};
use cstk_core::nn::{
    grad_check, CnnModel, CnnSpec, FusionInput, FusionModel, LogisticModel, Matrix,
};
use cstk_core::{Label, Utterance, WordToken};
use rand::Rng;

type Outcome = Result<String, String>;

fn random_matrix(r: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| r.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

fn random_spec(r: &mut rand_chacha::ChaCha8Rng) -> CnnSpec {
    let mut spec = CnnSpec::with_input_dim(r.random_range(2..=6));
    spec.filters_per_height = r.random_range(2..=6);
    spec
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut worst = [0.0f64; 3];
    for i in 0..100u64 {
        let spec = random_spec(&mut r);
        let t = r.random_range(spec.max_height()..=12);
        let l2 = r.random_range(0.0..1e-2);
        let y = if r.random_bool(0.5) {
            Label::Ad
        } else {
            Label::Cn
        };

        let mut cnn = CnnModel::new(spec.clone(), i).unwrap();
        let x = random_matrix(&mut r, t, spec.input_dim);
        let g = grad_check(&mut cnn, &x, y, l2, 200, &mut r);
        worst[0] = worst[0].max(g.max_rel_error);

        let e = r.random_range(1..=12);
        let mut fusion = FusionModel::new(spec.clone(), e, i).unwrap();
        let fx = FusionInput {
            sequence: x,
            embedding: (0..e).map(|_| r.random_range(-1.0..1.0)).collect(),
        };
        let g = grad_check(&mut fusion, &fx, y, l2, 200, &mut r);
        worst[1] = worst[1].max(g.max_rel_error);

        let d = r.random_range(1..=16);
        let mut lr = LogisticModel::from_parts(
            (0..d).map(|_| r.random_range(-2.0..2.0)).collect(),
            r.random_range(-1.0..1.0),
        );
        let lx: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        let g = grad_check(&mut lr, &lx, y, l2, 200, &mut r);
        worst[2] = worst[2].max(g.max_rel_error);
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "max rel error cnn {:.2e}, fusion {:.2e}, lr {:.2e} in {:.1}s",
        worst[0],
        worst[1],
        worst[2],
        elapsed.as_secs_f64()
    );
    if worst[0] < 1e-4 && worst[1] < 1e-4 && worst[2] < 1e-5 && elapsed < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn vote_oracle() -> Outcome {
    let mut r = rng(99);
    let mut table = VoteTable::new();
    let mut ties = 0;
    for i in 0..10_000 {
        let force_tie = i % 2 == 0;
        ties += force_tie as usize;
        table.insert(format!("m{i:05}"), random_votes(&mut r, force_tie));
    }
    let got = majority_vote(&table).map_err(|e| e.to_string())?;
    let mismatches = table
        .iter()
        .filter(|(s, v)| got[*s].label != brute_force_vote(v))
        .count();
    let detail =
        format!("{mismatches} mismatches over 10000 matrices ({ties} with forced count ties)");
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn disfluency_arithmetic() -> Outcome {
    let mut r = rng(7);
    let lex = SyllableLexicon::default();
    let cfg = PauseConfig::default();
    let mut mismatches = 0;
    let mut shift_mismatches = 0;
    for _ in 0..1000 {
        let words = dyadic_utterance(&mut r);
        let expected = reference_disfluency(&words);
        let u = Utterance::new(0, words.clone()).map_err(|e| e.to_string())?;
        let got = disfluency_vector(&u, &lex, &cfg).to_array();
        if got != expected {
            mismatches += 1;
        }
        let shift = r.random_range(1..64 * 600) as f64 / 64.0;
        let moved: Vec<WordToken> = words
            .iter()
            .map(|w| WordToken {
                start_s: w.start_s + shift,
                end_s: w.end_s + shift,
                ..w.clone()
            })
            .collect();
        let moved = Utterance::new(0, moved).map_err(|e| e.to_string())?;
        if disfluency_vector(&moved, &lex, &cfg).to_array() != got {
            shift_mismatches += 1;
        }
    }
    let detail = format!(
        "{mismatches} reference mismatches, {shift_mismatches} translation mismatches over 1000 utterances"
    );
    if mismatches == 0 && shift_mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn contour_bounds() -> Outcome {
    let mut r = rng(3);
    let wordlist =
        load_wordlist(b"boy\ncookie\njar\nmother\nwater\n").map_err(|e| e.to_string())?;
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = r.random_range(1..=5);
        let window: Vec<_> = (0..n).map(|_| random_sentence(&mut r)).collect();
        let tokens = lexical_tokens(&window);
        let upos: Vec<&str> = window
            .iter()
            .flat_map(|s| s.tokens())
            .map(|t| t.upos.as_str())
            .collect();
        let in_unit = |v: Option<f64>| v.is_none_or(|v| (0.0..=1.0).contains(&v));
        let t = ttr(&tokens);
        let ok = in_unit(t)
            && t.is_none_or(|v| v > 0.0)
            && in_unit(lexical_density(&upos))
            && in_unit(sophistication(&tokens, &wordlist))
            && (tokens.is_empty() == t.is_none());
        violations += !ok as usize;
    }
    let detail = format!("{violations} bound violations over 10000 windows");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn deflate_ordering() -> Outcome {
    let mut r = rng(5);
    let mut wins = 0;
    for _ in 0..100 {
        let phrase_len = r.random_range(3..12);
        let phrase: String = (0..phrase_len)
            .map(|_| r.random_range(b'a'..=b'z') as char)
            .collect();
        let repetitive = format!("{phrase} ").repeat(r.random_range(20..60));
        let random: String = (0..repetitive.len())
            .map(|_| {
                if r.random_bool(0.15) {
                    ' '
                } else {
                    r.random_range(b'a'..=b'z') as char
                }
            })
            .collect();
        if deflate_ratio(&repetitive) < deflate_ratio(&random) {
            wins += 1;
        }
    }
    let detail = format!("repetitive text compressed better in {wins}/100 trials");
    if wins == 100 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn syntactic_fixtures() -> Outcome {
    let trees = annotated_trees();
    let mut wrong = Vec::new();
    for (s, e) in &trees {
        let c = syntactic_counts(s);
        let m = syntactic_measures(s);
        let counts_ok = (
            c.words,
            c.clauses,
            c.dependent_clauses,
            c.t_units,
            c.coordinate_phrases,
            c.complex_nominals,
        ) == (
            e.words,
            e.clauses,
            e.dependent_clauses,
            e.t_units,
            e.coordinate_phrases,
            e.complex_nominals,
        );
        let ratios_ok = m["mean_length_clause"] == e.words as f64 / e.clauses as f64
            && m["clauses_per_sentence"] == e.clauses as f64
            && m["dependent_clauses_per_tunit"] == e.dependent_clauses as f64 / e.t_units as f64
            && m["coordinate_phrases_per_clause"] == e.coordinate_phrases as f64 / e.clauses as f64
            && m["complex_nominals_per_clause"] == e.complex_nominals as f64 / e.clauses as f64;
        if !(counts_ok && ratios_ok) {
            wrong.push(e.text.clone());
        }
    }
    let detail = format!(
        "{}/{} annotated trees match",
        trees.len() - wrong.len(),
        trees.len()
    );
    if wrong.is_empty() && trees.len() >= 10 {
        Ok(detail)
    } else {
        Err(format!("{detail}; wrong: {wrong:?}"))
    }
}

/// CNN cross-validation accuracy on a synthetic fixture, single-threaded.
fn synth_cnn_accuracy(separation: f64, seed: u64) -> Result<(f64, Duration), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| {
        let start = Instant::now();
        let fx = synth_fixture(40, separation, seed).map_err(|e| e.to_string())?;
        fx.write(dir.path()).map_err(|e| e.to_string())?;
        let mut cfg = load_experiment_config(&dir.path().join("experiment.json"), &[])
            .map_err(|e| e.to_string())?;
        cfg.models = vec![ModelKind::Cnn];
        let out = run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())?;
        Ok((out.reports[0].mean.accuracy, start.elapsed()))
    })
}

fn pipeline_signal() -> Outcome {
    let (acc_sep, t_sep) = synth_cnn_accuracy(2.0, 11)?;
    let (acc_null, t_null) = synth_cnn_accuracy(0.0, 11)?;
    let detail = format!(
        "separation 2.0: accuracy {acc_sep:.3} in {:.1}s; separation 0: accuracy {acc_null:.3} in {:.1}s",
        t_sep.as_secs_f64(),
        t_null.as_secs_f64()
    );
    let limit = Duration::from_secs(300);
    if acc_sep >= 0.90 && (0.35..=0.65).contains(&acc_null) && t_sep < limit && t_null < limit {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stacking_superiority() -> Outcome {
    let fx = two_oracle_fixture(50, 17);
    let cfg = StackConfig { l2: 1e-2, seed: 17 };
    let mut stacked = BTreeMap::new();
    for fold in 0..fx.plan.k {
        let train = fx.plan.train_speakers(fold);
        let test = fx.plan.test_speakers(fold);
        let inner = fx.plan.restrict(&train);
        let model = stack_fit(
            &fx.internal,
            &fx.predictions,
            &fx.external_models,
            &fx.labels,
            &inner,
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        let probs = stack_predict(&model, &fx.internal, &fx.predictions, &test)
            .map_err(|e| e.to_string())?;
        stacked.extend(probs.into_iter().map(|(s, p)| (s, hard_vote(p))));
    }
    let acc_c = accuracy(&stacked, &fx.labels);
    let base: Vec<(String, f64)> = fx
        .external_models
        .iter()
        .map(|m| {
            let pred: BTreeMap<String, Label> = fx
                .predictions
                .for_model(m)
                .map(|p| (p.speaker_id.clone(), hard_vote(p.probs)))
                .collect();
            (m.clone(), accuracy(&pred, &fx.labels))
        })
        .collect();
    let best = base.iter().map(|b| b.1).fold(0.0, f64::max);
    let detail = format!("model C accuracy {acc_c:.3}; base models {base:?}");
    if acc_c >= best && acc_c >= 0.95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn out_of_fold_audit() -> Outcome {
    let fx = two_oracle_fixture(40, 23);
    let model = stack_fit(
        &fx.internal,
        &fx.predictions,
        &fx.external_models,
        &fx.labels,
        &fx.plan,
        &StackConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let audit = audit_stack(&model, &fx.plan);

    // also through the full pipeline, where every outer fold records its audit
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth_fixture(20, 1.0, 4)
        .and_then(|f| f.write(dir.path()))
        .map_err(|e| e.to_string())?;
    let mut cfg = load_experiment_config(&dir.path().join("experiment.json"), &[])
        .map_err(|e| e.to_string())?;
    cfg.models = vec![ModelKind::ModelC];
    let out = run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let pipeline_rows: usize = out.manifest.folds.iter().filter_map(|f| f.stack_rows).sum();
    let pipeline_bad: usize = out
        .manifest
        .folds
        .iter()
        .filter_map(|f| f.stack_contaminated)
        .sum();
    let detail = format!(
        "fixture: {} contaminated of {} rows; pipeline: {pipeline_bad} contaminated of {pipeline_rows} rows",
        audit.contaminated.len(),
        audit.rows
    );
    if audit.contaminated.is_empty()
        && audit.rows == fx.labels.len()
        && pipeline_bad == 0
        && pipeline_rows > 0
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth_fixture(20, 1.0, 8)
        .and_then(|f| f.write(dir.path()))
        .map_err(|e| e.to_string())?;
    let cfg = load_experiment_config(&dir.path().join("experiment.json"), &[])
        .map_err(|e| e.to_string())?;
    let files = [
        "report.csv",
        "report.md",
        "manifest.json",
        "predictions.jsonl",
        "fold_plan.json",
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())?;
        let bytes: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(out.output_dir.join(f)).unwrap())
            .collect();
        runs.push(bytes);
    }
    let differing: Vec<&str> = files
        .iter()
        .zip(runs[0].iter().zip(&runs[1]))
        .filter(|(_, (a, b))| a != b)
        .map(|(f, _)| *f)
        .collect();
    let detail = format!(
        "models {:?}; differing files: {differing:?}",
        cfg.models.iter().map(|m| m.as_str()).collect::<Vec<_>>()
    );
    if differing.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fold_stratification() -> Outcome {
    let mut labels = BTreeMap::new();
    for i in 0..87 {
        labels.insert(format!("ad{i:03}"), Label::Ad);
    }
    for i in 0..79 {
        labels.insert(format!("cn{i:03}"), Label::Cn);
    }
    let plan = make_folds(&labels, 5, 0).map_err(|e| e.to_string())?;
    let counts: Vec<(usize, usize)> = (0..5)
        .map(|f| {
            let test = plan.test_speakers(f);
            let ad = test.iter().filter(|s| labels[*s] == Label::Ad).count();
            (ad, test.len() - ad)
        })
        .collect();
    let detail = format!("per-fold (AD, CN): {counts:?}");
    if counts
        .iter()
        .all(|&(ad, cn)| (17..=18).contains(&ad) && (15..=16).contains(&cn))
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("gradient correctness", gradient_correctness),
        ("vote oracle", vote_oracle),
        ("disfluency arithmetic", disfluency_arithmetic),
        ("contour bounds", contour_bounds),
        ("deflate ordering", deflate_ordering),
        ("syntactic fixtures", syntactic_fixtures),
        ("pipeline signal", pipeline_signal),
        ("stacking on complementary oracles", stacking_superiority),
        ("out-of-fold audit", out_of_fold_audit),
        ("determinism", determinism),
        ("fold stratification", fold_stratification),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
