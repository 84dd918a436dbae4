//! Property checks across the pipeline, each against a direct oracle or an
//! algebraic identity.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flakelex::corpus::{
    parse_csv, parse_jsonl, project_filter, render_corpus, stratified_split, train_count, Corpus, CorpusFormat,
    Label, ProjectMode, TestCase,
};
use flakelex::featurize::{build_vocabulary, count_java_keywords, vectorize, AblationConfig};
use flakelex::learn::{train, ClassifierKind, ClassifierSpec, SparseVec};
use flakelex::metrics::{auc, confusion, mcc, ConfusionMatrix};
use flakelex::model::fit;
use flakelex::rank::info_gain;
use flakelex::textpipe::{run_pipeline, tokenize_raw, PipelineConfig};

fn label_strategy() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Flaky), Just(Label::NonFlaky), Just(Label::Unknown)]
}

fn known_label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Flaky), Just(Label::NonFlaky)]
}

fn body_strategy() -> impl Strategy<Value = String> {
    "[ -~\n\t]{0,120}".prop_filter("non-blank body", |s| !s.trim().is_empty())
}

fn case_strategy(label: impl Strategy<Value = Label>) -> impl Strategy<Value = TestCase> {
    ("[a-d]", "[A-Za-z][A-Za-z0-9_.]{0,15}", label, body_strategy())
        .prop_map(|(p, q, l, b)| TestCase::new(p, q, l, b))
}

fn to_labels(bits: &[bool]) -> Vec<Label> {
    bits.iter().map(|&f| if f { Label::Flaky } else { Label::NonFlaky }).collect()
}

/// O(n^2) probability that a random flaky test outscores a random
/// non-flaky one, ties counting one half.
fn pairwise_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if truth[i] && !truth[j] {
                pairs += 1.0;
                wins += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
            }
        }
    }
    wins / pairs
}

#[test]
fn auc_matches_pairwise_oracle_on_1000_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_231_105);
    for _ in 0..1000 {
        let n = rng.gen_range(2..60);
        let truth: Vec<bool> = (0..n).map(|i| if i < 2 { i == 0 } else { rng.gen_bool(0.4) }).collect();
        // A coarse score grid produces plenty of ties.
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..8)) / 7.0).collect();
        let got = auc(&scores, &to_labels(&truth)).unwrap();
        assert!((got - pairwise_auc(&scores, &truth)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn raw_tokens_concatenate(a in "[ -~\n]{0,60}", b in "[ -~\n]{0,60}") {
        let mut joined = tokenize_raw(&a);
        joined.extend(tokenize_raw(&b));
        prop_assert_eq!(tokenize_raw(&format!("{a} {b}")), joined);
    }

    #[test]
    fn pipeline_concatenates(a in "[ -~\n]{0,60}", b in "[ -~\n]{0,60}", bits in 0u8..16) {
        let cfg = PipelineConfig {
            split_identifiers: bits & 1 != 0,
            lowercase: bits & 2 != 0,
            remove_stop_words: bits & 4 != 0,
            stem: bits & 8 != 0,
        };
        let mut joined = run_pipeline(&cfg, &a);
        joined.extend(run_pipeline(&cfg, &b));
        prop_assert_eq!(run_pipeline(&cfg, &format!("{a}\n{b}")), joined);
    }

    #[test]
    fn full_pipeline_emits_lowercase_non_stop_words(body in body_strategy()) {
        for t in run_pipeline(&PipelineConfig::full(), &body) {
            prop_assert!(!t.as_str().is_empty());
            prop_assert!(!t.as_str().chars().any(|c| c.is_ascii_uppercase()));
        }
    }

    #[test]
    fn stratified_split_is_exact(
        flaky in 2usize..30,
        other in 2usize..30,
        fraction in 0.2f64..0.8,
        seed in any::<u64>(),
    ) {
        let mut cases = Vec::new();
        for i in 0..flaky.max(other) {
            if i < flaky { cases.push(TestCase::new("p", format!("F{i}"), Label::Flaky, "a();")); }
            if i < other { cases.push(TestCase::new("p", format!("N{i}"), Label::NonFlaky, "b();")); }
        }
        let corpus = Corpus::new(cases, "c");
        let (tf, tn) = (train_count(fraction, flaky), train_count(fraction, other));
        let result = stratified_split(&corpus, fraction, seed);
        if tf == 0 || tf == flaky || tn == 0 || tn == other {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let (train_part, test_part) = result.unwrap();
        prop_assert_eq!(train_part.count(Label::Flaky), tf);
        prop_assert_eq!(train_part.count(Label::NonFlaky), tn);
        prop_assert_eq!(train_part.len() + test_part.len(), corpus.len());
        let a: BTreeSet<_> = train_part.iter().map(|c| c.qualified_name.clone()).collect();
        let b: BTreeSet<_> = test_part.iter().map(|c| c.qualified_name.clone()).collect();
        prop_assert!(a.is_disjoint(&b));
        let again = stratified_split(&corpus, fraction, seed).unwrap();
        prop_assert_eq!(again.0.cases, train_part.cases);
    }

    #[test]
    fn project_filter_partitions_validation(
        validation in prop::collection::vec(case_strategy(Just(Label::Flaky)), 0..30),
        reference in prop::collection::vec(case_strategy(known_label()), 0..30),
    ) {
        let v = Corpus::new(validation, "v");
        let r = Corpus::new(reference, "r");
        let (intra, ri) = project_filter(&v, &r, ProjectMode::Intra);
        let (inter, rx) = project_filter(&v, &r, ProjectMode::Inter);
        prop_assert_eq!(ri.shared_with_reference, rx.shared_with_reference);
        prop_assert_eq!(intra.len() + inter.len() + ri.shared_with_reference, v.len());
        let known = r.projects();
        prop_assert!(intra.iter().all(|c| known.contains(c.project.as_str())));
        prop_assert!(inter.iter().all(|c| !known.contains(c.project.as_str())));
    }

    #[test]
    fn mcc_symmetries(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
        let cm = ConfusionMatrix { tp, fp, fn_, tn };
        let m = mcc(&cm);
        prop_assert!((-1.0..=1.0).contains(&m.value));
        // Relabeling which class counts as positive leaves MCC unchanged.
        prop_assert!((mcc(&cm.swapped()).value - m.value).abs() < 1e-12);
        // Inverting every prediction negates it.
        let inverted = ConfusionMatrix { tp: fn_, fp: tn, fn_: tp, tn: fp };
        prop_assert!((mcc(&inverted).value + m.value).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one(truth in prop::collection::vec(any::<bool>(), 2..40)) {
        prop_assume!(truth.iter().any(|&t| t) && truth.iter().any(|&t| !t));
        let labels = to_labels(&truth);
        let cm = confusion(&labels, &labels).unwrap();
        prop_assert_eq!(mcc(&cm).value, 1.0);
        let scores: Vec<f64> = truth.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
        prop_assert_eq!(auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn info_gain_bounds_and_negation(
        rows in prop::collection::vec((any::<bool>(), any::<bool>()), 2..60),
    ) {
        let (x, y): (Vec<bool>, Vec<bool>) = rows.into_iter().unzip();
        prop_assume!(y.iter().any(|&t| t) && y.iter().any(|&t| !t));
        let labels = to_labels(&y);
        let g = info_gain(&x, &labels).unwrap();
        let p = y.iter().filter(|&&t| t).count() as f64 / y.len() as f64;
        let h = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        prop_assert!(g >= 0.0 && g <= h + 1e-12);
        let negated: Vec<bool> = x.iter().map(|v| !v).collect();
        prop_assert!((info_gain(&negated, &labels).unwrap() - g).abs() < 1e-12);
        prop_assert!((info_gain(&y, &labels).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn keyword_total_is_the_sum(body in "[ -~\n]{0,200}", words in prop::collection::vec("(if|for|new|class|int|final|throws|x|_|1)", 0..20)) {
        let text = format!("{body} {}", words.join(" "));
        let (counts, total) = count_java_keywords(&text);
        prop_assert_eq!(counts.iter().sum::<u32>(), total);
    }

    #[test]
    fn corpus_round_trips(cases in prop::collection::vec(case_strategy(label_strategy()), 0..20)) {
        let corpus = Corpus::new(cases, "c");
        let csv = render_corpus(&corpus, CorpusFormat::Csv).unwrap();
        prop_assert_eq!(parse_csv(&csv, "c").unwrap().cases, corpus.cases.clone());
        let jsonl = render_corpus(&corpus, CorpusFormat::Jsonl).unwrap();
        prop_assert_eq!(parse_jsonl(&jsonl, "c").unwrap().cases, corpus.cases);
    }

    #[test]
    fn vectors_match_vocabulary(cases in prop::collection::vec(case_strategy(known_label()), 1..12)) {
        let corpus = Corpus::new(cases, "c");
        for ablation in AblationConfig::ALL {
            let Ok(vocab) = build_vocabulary(&corpus, ablation) else { continue };
            for case in &corpus {
                let fv = vectorize(case, &vocab, ablation).unwrap();
                let sparse = fv.to_sparse();
                prop_assert_eq!(sparse.dim(), vocab.layout().width());
                prop_assert!(fv.token_counts.keys().all(|&c| c < vocab.len()));
                prop_assert_eq!(fv.keyword_counts.iter().sum::<u32>(), fv.keyword_total);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn models_round_trip_through_json(seed in any::<u64>(), kind in 0usize..8) {
        let mut cases = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..12 {
            let flaky = i % 2 == 0;
            let body = if flaky { "Thread.sleep(10);" } else { "assertEquals(a, b);" };
            let noise: String = (0..rng.gen_range(1..4)).map(|k| format!(" v{}", rng.gen_range(0..5) + k)).collect();
            cases.push(TestCase::new("p", format!("T{i}"), if flaky { Label::Flaky } else { Label::NonFlaky }, format!("{body}{noise}")));
        }
        let corpus = Corpus::new(cases, "c");
        let spec = ClassifierSpec::new(ClassifierKind::ALL[kind], seed);
        let bundle = fit(&corpus, AblationConfig::AllFeatures, &spec).unwrap();
        let back = flakelex::model::ModelBundle::from_json(&bundle.to_json()).unwrap();
        prop_assert_eq!(&back, &bundle);
        prop_assert_eq!(back.predict(&corpus).unwrap(), bundle.predict(&corpus).unwrap());
    }

    #[test]
    fn training_ignores_row_order(seed in any::<u64>(), kind in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 24;
        let rows: Vec<SparseVec> = (0..n)
            .map(|i| {
                let shift = if i % 2 == 0 { 1.5 } else { -1.5 };
                SparseVec::from_dense(&[shift + rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0), f64::from(rng.gen_range(0..3))])
            })
            .collect();
        let y: Vec<Label> = (0..n).map(|i| if i % 2 == 0 { Label::Flaky } else { Label::NonFlaky }).collect();
        let spec = ClassifierSpec::new(ClassifierKind::ALL[kind], 9);
        let a = train(&spec, &rows, &y).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left((seed % n as u64) as usize);
        let rows2: Vec<SparseVec> = order.iter().map(|&i| rows[i].clone()).collect();
        let y2: Vec<Label> = order.iter().map(|&i| y[i]).collect();
        let b = train(&spec, &rows2, &y2).unwrap();
        prop_assert_eq!(a.score_batch(&rows).unwrap(), b.score_batch(&rows).unwrap());
    }
}
