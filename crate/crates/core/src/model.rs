//! Model files: a trained classifier packaged with the vocabulary it was
//! trained against, stored as versioned JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::featurize::{build_vocabulary, design_matrix, AblationConfig, Vocabulary};
use crate::io::{read_to_string, write_atomic};
use crate::learn::{train, ClassifierSpec, Prediction, TrainedModel};
use crate::metrics::{evaluate, EvalReport};

pub const MODEL_FORMAT: &str = "flakelex-model";
pub const MODEL_VERSION: u32 = 1;

/// A classifier together with the vocabulary its columns refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub vocabulary: Vocabulary,
    pub model: TrainedModel,
}

#[derive(Serialize, Deserialize)]
struct BundleRepr {
    format: String,
    version: u32,
    ablation: AblationConfig,
    vocabulary: Vocabulary,
    model: TrainedModel,
}

/// One line of `predict` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub qualified_name: String,
    pub label: Label,
    pub score: f64,
}

impl ModelBundle {
    /// Pairs a model with a vocabulary, checking that they belong together.
    pub fn new(vocabulary: Vocabulary, model: TrainedModel) -> Result<Self> {
        if model.fingerprint != vocabulary.fingerprint() {
            return Err(Error::ConfigMismatch {
                expected: model.fingerprint.clone(),
                found: vocabulary.fingerprint().to_string(),
            });
        }
        if model.width != vocabulary.layout().width() {
            return Err(Error::DimensionMismatch {
                expected: vocabulary.layout().width(),
                found: model.width,
            });
        }
        Ok(Self { vocabulary, model })
    }

    pub fn ablation(&self) -> AblationConfig {
        self.vocabulary.ablation()
    }

    pub fn to_json(&self) -> String {
        let repr = BundleRepr {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            ablation: self.ablation(),
            vocabulary: self.vocabulary.clone(),
            model: self.model.clone(),
        };
        serde_json::to_string(&repr).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: BundleRepr = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if repr.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format tag `{}`", repr.format)));
        }
        if repr.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported model version {}", repr.version)));
        }
        if repr.ablation != repr.vocabulary.ablation() {
            return Err(Error::ConfigMismatch {
                expected: repr.ablation.name().to_string(),
                found: repr.vocabulary.ablation().name().to_string(),
            });
        }
        Self::new(repr.vocabulary, repr.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }

    /// Scores every case; labels in `corpus` are ignored.
    pub fn predict(&self, corpus: &Corpus) -> Result<Vec<PredictionLine>> {
        let (rows, _) = design_matrix(corpus, &self.vocabulary)?;
        let preds: Vec<Prediction> = self.model.predict_batch(&rows)?;
        Ok(corpus
            .iter()
            .zip(preds)
            .map(|(c, p)| PredictionLine {
                qualified_name: c.qualified_name.clone(),
                label: p.label,
                score: p.score,
            })
            .collect())
    }

    pub fn evaluate(&self, test: &Corpus) -> Result<EvalReport> {
        evaluate(&self.model, test, &self.vocabulary, self.ablation())
    }
}

/// Builds the vocabulary from `train`, vectorizes it and fits one classifier.
pub fn fit(train_corpus: &Corpus, ablation: AblationConfig, spec: &ClassifierSpec) -> Result<ModelBundle> {
    train_corpus.ensure_trainable()?;
    let vocabulary = build_vocabulary(train_corpus, ablation)?;
    let (rows, labels) = design_matrix(train_corpus, &vocabulary)?;
    let model = train(spec, &rows, &labels)?.with_fingerprint(vocabulary.fingerprint());
    ModelBundle::new(vocabulary, model)
}

/// Renders predictions as JSON Lines.
pub fn render_predictions(lines: &[PredictionLine]) -> String {
    lines
        .iter()
        .map(|l| serde_json::to_string(l).expect("prediction serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TestCase;
    use crate::learn::ClassifierKind;

    fn corpus() -> Corpus {
        let mut cases = Vec::new();
        for i in 0..6 {
            cases.push(TestCase::new("p", format!("f{i}"), Label::Flaky, "Thread.sleep(500);\nwaitFor(job);"));
            cases.push(TestCase::new("p", format!("n{i}"), Label::NonFlaky, "assertEquals(1, add(0, 1));"));
        }
        Corpus::new(cases, "tiny")
    }

    #[test]
    fn bundle_round_trips() {
        for kind in ClassifierKind::ALL {
            let b = fit(&corpus(), AblationConfig::AllFeatures, &ClassifierSpec::new(kind, 7)).unwrap();
            let text = b.to_json();
            let back = ModelBundle::from_json(&text).unwrap();
            assert_eq!(back, b, "{kind}");
            assert_eq!(back.to_json(), text);
            assert_eq!(back.predict(&corpus()).unwrap(), b.predict(&corpus()).unwrap());
        }
    }

    #[test]
    fn rejects_foreign_vocabulary() {
        let b = fit(&corpus(), AblationConfig::AllFeatures, &ClassifierSpec::new(ClassifierKind::Lda, 7)).unwrap();
        let other = Vocabulary::from_tokens(AblationConfig::AllFeatures, ["zzz".to_string()]);
        assert!(matches!(ModelBundle::new(other, b.model.clone()), Err(Error::ConfigMismatch { .. })));
        let mut v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        v["version"] = 9.into();
        assert!(matches!(ModelBundle::from_json(&v.to_string()), Err(Error::ModelFormat(_))));
    }
}
