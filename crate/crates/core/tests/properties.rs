mod common;

use std::collections::BTreeMap;

use cstk_core::disfluency::{disfluency_vector, pause_features, PauseConfig};
use cstk_core::ensemble::{vote, PredictionSet, PredictionVector, VoteTable};
use cstk_core::harness::{
    compute_metrics, make_folds, parse_report_csv, render_report, FoldMetrics, MetricsReport,
    ReportFormat, Scores, Standardizer,
};
use cstk_core::ingest::SyllableLexicon;
use cstk_core::nn::{read_container, softmax, write_container, Container, ParamSet};
use cstk_core::{Label, Utterance, WordToken};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Cn), Just(Label::Ad)]
}

/// Probability vectors on a 1/64 grid, so sums are exact.
fn dyadic_probs() -> impl Strategy<Value = [f64; 2]> {
    (0u32..=64).prop_map(|k| [1.0 - k as f64 / 64.0, k as f64 / 64.0])
}

fn labels_map(n_cn: usize, n_ad: usize) -> BTreeMap<String, Label> {
    (0..n_cn)
        .map(|i| (format!("c{i}"), Label::Cn))
        .chain((0..n_ad).map(|i| (format!("a{i}"), Label::Ad)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn vote_is_permutation_invariant(votes in prop::collection::vec(dyadic_probs(), 1..60), seed in any::<u64>()) {
        let base = vote(&votes).unwrap();
        let mut shuffled = votes.clone();
        let mut r = common::rng(seed);
        for i in (1..shuffled.len()).rev() {
            let j = rand::Rng::random_range(&mut r, 0..=i);
            shuffled.swap(i, j);
        }
        let again = vote(&shuffled).unwrap();
        prop_assert_eq!(base, again);
    }

    #[test]
    fn vote_agrees_with_tally(votes in prop::collection::vec(dyadic_probs(), 1..60)) {
        prop_assert_eq!(vote(&votes).unwrap().label, common::brute_force_vote(&votes));
    }

    #[test]
    fn mean_of_simplex_vectors_is_on_simplex(ps in prop::collection::vec(0.0f64..=1.0, 1..50)) {
        let votes: Vec<[f64; 2]> = ps.iter().map(|&p| [1.0 - p, p]).collect();
        let m = vote(&votes).unwrap().mean_probs;
        prop_assert!((m[0] + m[1] - 1.0).abs() < 1e-9);
        prop_assert!(m.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
    }

    #[test]
    fn folds_are_stratified(n_cn in 2usize..60, n_ad in 2usize..60, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(n_cn >= k && n_ad >= k);
        let labels = labels_map(n_cn, n_ad);
        let plan = make_folds(&labels, k, seed).unwrap();
        prop_assert_eq!(plan.assignments.len(), labels.len());
        for (class, n) in [(Label::Cn, n_cn), (Label::Ad, n_ad)] {
            for f in 0..k {
                let c = plan.test_speakers(f).iter().filter(|s| labels[*s] == class).count();
                prop_assert!(c == n / k || c == n.div_ceil(k), "class {:?} fold {} has {}", class, f, c);
            }
        }
        prop_assert_eq!(make_folds(&labels, k, seed).unwrap(), plan);
    }

    #[test]
    fn fold_plan_json_round_trips(n in 5usize..30, seed in any::<u64>()) {
        let plan = make_folds(&labels_map(n, n), 5, seed).unwrap();
        let back = cstk_core::harness::FoldPlan::from_json(plan.to_json().as_bytes()).unwrap();
        prop_assert_eq!(back, plan);
    }

    #[test]
    fn metric_identities(pairs in prop::collection::vec((label(), label()), 1..80)) {
        let truth: BTreeMap<String, Label> = pairs.iter().enumerate().map(|(i, p)| (format!("s{i}"), p.0)).collect();
        let pred: BTreeMap<String, Label> = pairs.iter().enumerate().map(|(i, p)| (format!("s{i}"), p.1)).collect();
        let m = compute_metrics(&pred, &truth).unwrap();
        let s = m.scores;
        for v in s.to_array() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // accuracy is the support-weighted mean recall
        let n = pairs.len() as f64;
        let n_ad = pairs.iter().filter(|p| p.0 == Label::Ad).count() as f64;
        let weighted = (s.recall_ad * n_ad + s.recall_cn * (n - n_ad)) / n;
        prop_assert!((weighted - s.accuracy).abs() < 1e-12);
        // micro-averaged precision equals accuracy in the two-class case
        let p_ad = pairs.iter().filter(|p| p.1 == Label::Ad).count() as f64;
        let micro = (s.precision_ad * p_ad + s.precision_cn * (n - p_ad)) / n;
        prop_assert!((micro - s.accuracy).abs() < 1e-12);
        if s.precision_ad + s.recall_ad == 0.0 {
            prop_assert_eq!(s.f1_ad, 0.0);
        }
        // renaming speakers changes nothing
        let rename = |m: &BTreeMap<String, Label>| -> BTreeMap<String, Label> {
            m.iter().map(|(k, v)| (format!("renamed-{}", k.chars().rev().collect::<String>()), *v)).collect()
        };
        prop_assert_eq!(compute_metrics(&rename(&pred), &rename(&truth)).unwrap(), m);
    }

    #[test]
    fn report_csv_round_trips(values in prop::collection::vec(prop::array::uniform7(0u32..=1_000_000), 1..6)) {
        let folds: Vec<FoldMetrics> = values
            .iter()
            .map(|a| FoldMetrics {
                scores: Scores::from_array(a.map(|v| v as f64 / 1e6)),
                zero_division: Vec::new(),
            })
            .collect();
        let reports = vec![MetricsReport::from_folds("m", folds)];
        let csv = render_report(&reports, ReportFormat::Csv);
        let parsed = parse_report_csv(&csv).unwrap();
        prop_assert_eq!(render_report(&parsed, ReportFormat::Csv), csv);
    }

    #[test]
    fn standardizer_ignores_rows_it_was_not_fit_on(
        rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 2..20),
        sentinel in prop::sample::select(vec![1e12, -1e12, f64::MAX / 4.0]),
    ) {
        let train = Standardizer::fit(rows.iter().map(Vec::as_slice)).unwrap();
        // the held-out row is transformed but never changes the statistics
        let held_out = vec![sentinel; 3];
        let _ = train.apply(&held_out);
        let again = Standardizer::fit(rows.iter().map(Vec::as_slice)).unwrap();
        prop_assert_eq!(&train, &again);
        for j in 0..3 {
            let col: Vec<f64> = rows.iter().map(|r| train.apply(r)[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-700.0f64..700.0, 1..8)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn disfluency_translation_invariant(seed in any::<u64>(), k in 1u32..40_000) {
        let mut r = common::rng(seed);
        let words = common::dyadic_utterance(&mut r);
        let shift = k as f64 / 64.0;
        let moved: Vec<WordToken> = words
            .iter()
            .map(|w| WordToken { start_s: w.start_s + shift, end_s: w.end_s + shift, ..w.clone() })
            .collect();
        let lex = SyllableLexicon::default();
        let cfg = PauseConfig::default();
        let a = disfluency_vector(&Utterance::new(0, words).unwrap(), &lex, &cfg);
        let b = disfluency_vector(&Utterance::new(0, moved).unwrap(), &lex, &cfg);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pause_counts_are_bounded(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let words = common::dyadic_utterance(&mut r);
        let n = words.len() as u32;
        let u = Utterance::new(0, words).unwrap();
        let p = pause_features(&u, &PauseConfig::default());
        prop_assert!(p.n_long + p.n_short < n.max(1));
        prop_assert!(p.pause_time >= 0.0 && p.pause_time <= u.span());
        prop_assert!(p.pause_time > 2.0 * p.n_long as f64 || p.n_long == 0);
    }

    #[test]
    fn container_round_trips(arrays in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 1..20), 1..5)) {
        let mut params = ParamSet::default();
        for (i, a) in arrays.iter().enumerate() {
            params.push(format!("a{i}.weight"), vec![a.len()], a.clone());
        }
        let c = Container {
            kind: "test".into(),
            spec: serde_json::json!({"n": arrays.len()}),
            meta: serde_json::json!({}),
            params,
        };
        let bytes = write_container(&c);
        let back = read_container(&bytes).unwrap();
        prop_assert_eq!(&back.params, &c.params);
        prop_assert_eq!(back.kind, c.kind);
        prop_assert!(read_container(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn prediction_jsonl_round_trips(probs in prop::collection::vec(0.0f64..=1.0, 1..20)) {
        let mut set = PredictionSet::default();
        for (i, p) in probs.iter().enumerate() {
            set.insert(PredictionVector {
                speaker_id: format!("s{i}"),
                model_id: "m".into(),
                instance_id: (i % 3) as u32,
                fold: Some(i % 5),
                probs: [1.0 - p, *p],
            }).unwrap();
        }
        let text = set.to_jsonl();
        let back = cstk_core::ensemble::read_predictions(text.as_bytes()).unwrap();
        prop_assert_eq!(back.to_jsonl(), text);
        let table: VoteTable = back.vote_table("m");
        prop_assert_eq!(table.len(), probs.len());
    }
}
