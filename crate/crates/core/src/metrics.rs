//! Confusion matrices, the five evaluation metrics, and the held-out and
//! flaky-only evaluation drivers. Flaky is the positive class.
//!
//! Metrics whose denominator is zero evaluate to 0 and are flagged as
//! undefined rather than producing NaN.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::featurize::{design_matrix, AblationConfig, Vocabulary};
use crate::learn::{ClassifierKind, TrainedModel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Swaps the roles of the two classes.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

/// A metric value plus whether it hit a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub value: f64,
    pub undefined: bool,
}

impl Metric {
    fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Metric {
                value: 0.0,
                undefined: true,
            }
        } else {
            Metric {
                value: num / den,
                undefined: false,
            }
        }
    }
}

pub fn confusion(preds: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: truth.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truth) {
        match (p.is_flaky(), t.is_flaky()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

pub fn precision(cm: &ConfusionMatrix) -> Metric {
    Metric::ratio(cm.tp as f64, (cm.tp + cm.fp) as f64)
}

pub fn recall(cm: &ConfusionMatrix) -> Metric {
    Metric::ratio(cm.tp as f64, (cm.tp + cm.fn_) as f64)
}

/// Harmonic mean of the precision and recall computed from `cm`.
pub fn f1(cm: &ConfusionMatrix) -> Metric {
    let (p, r) = (precision(cm).value, recall(cm).value);
    Metric::ratio(2.0 * p * r, p + r)
}

pub fn mcc(cm: &ConfusionMatrix) -> Metric {
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    Metric::ratio(tp * tn - fp * fn_, den.sqrt())
}

/// Rank-based (Mann-Whitney) area under the ROC curve; tied scores share
/// their average rank, which counts a flaky/non-flaky tie as one half.
pub fn auc(scores: &[f64], truth: &[Label]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    let n_pos = truth.iter().filter(|l| l.is_flaky()).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]].total_cmp(&scores[order[i]]) == Ordering::Equal {
            j += 1;
        }
        // Ranks i+1 ..= j share their mean.
        let avg = (i + 1 + j) as f64 / 2.0;
        let pos = order[i..j].iter().filter(|&&k| truth[k].is_flaky()).count();
        pos_rank_sum += avg * pos as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Held-out evaluation of one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classifier: ClassifierKind,
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    /// `None` when the evaluated set holds a single class.
    pub auc: Option<f64>,
    pub dataset: String,
    pub seed: u64,
    /// Names of metrics that hit a zero denominator.
    pub undefined: Vec<&'static str>,
}

/// The exact JSON shape of a report file.
#[derive(Serialize, Deserialize)]
struct ReportJson {
    classifier: String,
    precision: f64,
    recall: f64,
    f1: f64,
    mcc: f64,
    auc: Option<f64>,
    tp: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    tn: u64,
    seed: u64,
    dataset: String,
}

impl EvalReport {
    pub fn from_predictions(
        classifier: ClassifierKind,
        preds: &[Label],
        scores: &[f64],
        truth: &[Label],
        dataset: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        let cm = confusion(preds, truth)?;
        let metrics = [
            ("precision", precision(&cm)),
            ("recall", recall(&cm)),
            ("f1", f1(&cm)),
            ("mcc", mcc(&cm)),
        ];
        let auc = match auc(scores, truth) {
            Ok(v) => Some(v),
            Err(Error::SingleClassAuc) => None,
            Err(e) => return Err(e),
        };
        let mut undefined: Vec<&'static str> = metrics.iter().filter(|(_, m)| m.undefined).map(|(n, _)| *n).collect();
        if auc.is_none() {
            undefined.push("auc");
        }
        Ok(Self {
            classifier,
            confusion: cm,
            precision: metrics[0].1.value,
            recall: metrics[1].1.value,
            f1: metrics[2].1.value,
            mcc: metrics[3].1.value,
            auc,
            dataset: dataset.into(),
            seed,
            undefined,
        })
    }

    /// Report as a JSON object with the fields `classifier, precision,
    /// recall, f1, mcc, auc, tp, fp, fn, tn, seed, dataset`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ReportJson {
            classifier: self.classifier.code().to_string(),
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
            mcc: self.mcc,
            auc: self.auc,
            tp: self.confusion.tp,
            fp: self.confusion.fp,
            fn_: self.confusion.fn_,
            tn: self.confusion.tn,
            seed: self.seed,
            dataset: self.dataset.clone(),
        })
        .expect("report serializes")
    }
}

fn check_binding(model: &TrainedModel, vocab: &Vocabulary) -> Result<()> {
    if model.fingerprint != vocab.fingerprint() {
        return Err(Error::ConfigMismatch {
            expected: model.fingerprint.clone(),
            found: vocab.fingerprint().to_string(),
        });
    }
    Ok(())
}

/// Vectorizes `test`, scores it with `model` and computes every metric.
pub fn evaluate(
    model: &TrainedModel,
    test: &Corpus,
    vocab: &Vocabulary,
    ablation: AblationConfig,
) -> Result<EvalReport> {
    check_binding(model, vocab)?;
    if ablation != vocab.ablation() {
        return Err(Error::ConfigMismatch {
            expected: vocab.ablation().name().to_string(),
            found: ablation.name().to_string(),
        });
    }
    if test.count(Label::Unknown) > 0 {
        return Err(Error::UnlabeledTraining);
    }
    let (rows, truth) = design_matrix(test, vocab)?;
    let scores = model.score_batch(&rows)?;
    let preds: Vec<Label> = scores.iter().map(|&s| model.label_for(s)).collect();
    EvalReport::from_predictions(model.kind(), &preds, &scores, &truth, test.origin.clone(), model.spec.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub recall: f64,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Recall on a corpus made only of flaky tests.
pub fn recall_only_evaluate(
    model: &TrainedModel,
    flaky_only: &Corpus,
    vocab: &Vocabulary,
    ablation: AblationConfig,
) -> Result<RecallReport> {
    check_binding(model, vocab)?;
    if let Some(c) = flaky_only.iter().find(|c| c.label != Label::Flaky) {
        return Err(Error::NonFlakyPresent(c.qualified_name.clone()));
    }
    if ablation != vocab.ablation() {
        return Err(Error::ConfigMismatch {
            expected: vocab.ablation().name().to_string(),
            found: ablation.name().to_string(),
        });
    }
    let (rows, _) = design_matrix(flaky_only, vocab)?;
    let preds = model.predict_batch(&rows)?;
    let tp = preds.iter().filter(|p| p.label.is_flaky()).count() as u64;
    let fn_ = preds.len() as u64 - tp;
    let r = recall(&ConfusionMatrix { tp, fp: 0, fn_, tn: 0 });
    Ok(RecallReport {
        recall: r.value,
        tp,
        fn_,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Flaky as F, NonFlaky as N};

    fn cm(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    #[test]
    fn confusion_counts() {
        assert_eq!(confusion(&[F, F, N], &[F, F, N]).unwrap(), cm(2, 0, 0, 1));
        assert_eq!(confusion(&[N; 4], &[F; 4]).unwrap(), cm(0, 0, 4, 0));
        assert!(matches!(confusion(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(confusion(&[F], &[]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn rates() {
        assert_eq!(precision(&cm(3, 1, 0, 0)).value, 0.75);
        assert_eq!(recall(&cm(60, 0, 20, 0)).value, 0.75);
        let c = cm(9, 1, 1, 9);
        assert!((f1(&c).value - 0.9).abs() < 1e-15);
        let empty = precision(&cm(0, 0, 3, 3));
        assert_eq!((empty.value, empty.undefined), (0.0, true));
        assert!(f1(&cm(0, 0, 3, 3)).undefined);
    }

    #[test]
    fn mcc_values() {
        assert_eq!(mcc(&cm(5, 0, 0, 7)).value, 1.0);
        assert_eq!(mcc(&cm(0, 7, 5, 0)).value, -1.0);
        assert!((mcc(&cm(9, 1, 1, 9)).value - 0.8).abs() < 1e-15);
        assert!(mcc(&cm(4, 0, 0, 0)).undefined);
    }

    #[test]
    fn auc_values() {
        assert_eq!(auc(&[0.9, 0.8, 0.1], &[F, F, N]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &[F, N, F, N]).unwrap(), 0.5);
        assert_eq!(auc(&[0.8, 0.3, 0.5, 0.1], &[F, F, N, N]).unwrap(), 0.75);
        assert!(matches!(auc(&[0.1, 0.2], &[F, F]), Err(Error::SingleClassAuc)));
    }

    #[test]
    fn report_json_has_exact_fields() {
        let r = EvalReport::from_predictions(ClassifierKind::RandomForest, &[F, N], &[0.9, 0.1], &[F, N], "d", 42)
            .unwrap();
        let v = r.to_json();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            ["auc", "classifier", "dataset", "f1", "fn", "fp", "mcc", "precision", "recall", "seed", "tn", "tp"]
        );
        assert_eq!(v["classifier"], "rf");
        assert!(r.undefined.is_empty());
    }
}
