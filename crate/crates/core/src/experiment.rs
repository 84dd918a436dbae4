//! End-to-end experiments: held-out evaluation, feature ablation, and
//! cross-project validation.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{project_filter, stratified_split, Corpus, FilterReport, Label, ProjectMode};
use crate::error::{Error, Result};
use crate::featurize::{build_vocabulary, design_matrix, AblationConfig, Vocabulary};
use crate::learn::{train, ClassifierKind, ClassifierSpec, TrainedModel};
use crate::metrics::{evaluate, recall_only_evaluate, EvalReport, RecallReport};
use crate::rank::{rank_features, FeatureStat};

/// Builds one vocabulary from `train_corpus` and fits each classifier on it
/// in parallel. Models come back in the order of `classifiers`.
pub fn fit_all(
    train_corpus: &Corpus,
    ablation: AblationConfig,
    classifiers: &[ClassifierKind],
    seed: u64,
) -> Result<(Vocabulary, Vec<TrainedModel>)> {
    train_corpus.ensure_trainable()?;
    let vocab = build_vocabulary(train_corpus, ablation)?;
    let (rows, labels) = design_matrix(train_corpus, &vocab)?;
    let models = classifiers
        .par_iter()
        .map(|&kind| {
            let model = train(&ClassifierSpec::new(kind, seed), &rows, &labels)?;
            log::debug!("trained {kind} in {:?}", model.training.duration);
            Ok(model.with_fingerprint(vocab.fingerprint()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((vocab, models))
}

/// Stratified split, then train and evaluate every classifier.
pub fn train_eval(
    corpus: &Corpus,
    ablation: AblationConfig,
    classifiers: &[ClassifierKind],
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    let (train_part, test_part) = stratified_split(corpus, train_fraction, seed)?;
    eval_split(&train_part, &test_part, ablation, classifiers, seed)
}

fn eval_split(
    train_part: &Corpus,
    test_part: &Corpus,
    ablation: AblationConfig,
    classifiers: &[ClassifierKind],
    seed: u64,
) -> Result<Vec<EvalReport>> {
    let (vocab, models) = fit_all(train_part, ablation, classifiers, seed)?;
    models
        .par_iter()
        .map(|m| evaluate(m, test_part, &vocab, ablation))
        .collect()
}

/// Every ablation (in [`AblationConfig::ALL`] order) crossed with every
/// classifier, all on the same split.
pub fn ablate(
    corpus: &Corpus,
    classifiers: &[ClassifierKind],
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<(AblationConfig, EvalReport)>> {
    let (train_part, test_part) = stratified_split(corpus, train_fraction, seed)?;
    let mut rows = Vec::new();
    for ablation in AblationConfig::ALL {
        let reports = eval_split(&train_part, &test_part, ablation, classifiers, seed)?;
        rows.extend(reports.into_iter().map(|r| (ablation, r)));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossvalOutcome {
    pub mode: ProjectMode,
    pub filter: FilterReport,
    pub recalls: Vec<(ClassifierKind, RecallReport)>,
    /// Info-gain ranking of the filtered flaky tests against the training
    /// corpus's non-flaky tests. Empty when the filter keeps nothing.
    pub ranking: Vec<FeatureStat>,
}

/// Trains on all of `training`, keeps the validation tests on the `mode`
/// side of the project boundary and measures recall on them.
pub fn crossval(
    training: &Corpus,
    validation: &Corpus,
    mode: ProjectMode,
    classifiers: &[ClassifierKind],
    seed: u64,
    top: usize,
) -> Result<CrossvalOutcome> {
    if let Some(c) = validation.iter().find(|c| c.label != Label::Flaky) {
        return Err(Error::NonFlakyPresent(c.qualified_name.clone()));
    }
    let ablation = AblationConfig::AllFeatures;
    let (filtered, filter) = project_filter(validation, training, mode);
    log::info!(
        "{mode}: kept {} tests from {} projects ({} already in training)",
        filter.cases,
        filter.projects,
        filter.shared_with_reference
    );
    let (vocab, models) = fit_all(training, ablation, classifiers, seed)?;
    let recalls = models
        .iter()
        .map(|m| Ok((m.kind(), recall_only_evaluate(m, &filtered, &vocab, ablation)?)))
        .collect::<Result<Vec<_>>>()?;

    let ranking = if filtered.is_empty() {
        Vec::new()
    } else {
        let mut cases = filtered.cases.clone();
        cases.extend(training.iter().filter(|c| c.label == Label::NonFlaky).cloned());
        let contrast = Corpus::new(cases, format!("{}+non-flaky", filtered.origin));
        rank_features(&contrast, ablation, top)?
    };
    Ok(CrossvalOutcome {
        mode,
        filter,
        recalls,
        ranking,
    })
}
