//! The eight classifiers behind one contract: train on sparse rows with
//! flaky/non-flaky labels, then produce a real-valued flakiness score and a
//! hard label per row.
//!
//! Score semantics differ per kind:
//!
//! | kind | score | threshold |
//! |------|-------|-----------|
//! | random forest | fraction of trees voting flaky | 0.5 |
//! | decision tree | flaky fraction of the reached leaf | 0.5 |
//! | naive Bayes | posterior probability of flaky | 0.5 |
//! | logistic regression | fitted probability of flaky | 0.5 |
//! | nearest neighbour | flaky fraction among the k neighbours | 0.5 |
//! | linear SVM, LDA, perceptron | signed margin | 0 |
//!
//! A row is predicted flaky when its score is at least the threshold.
//!
//! Training first sorts the rows into a canonical order (by content, then
//! label), so every learner is invariant to the order of its input rows.
//! Learners that consume samples in sequence then apply their own seeded
//! shuffle. Inputs are raw feature values; no scaling is applied, which
//! mostly matters for nearest neighbour (distances are dominated by large
//! counts such as `loc`) and for the iteration counts of the linear models.

mod bayes;
mod data;
mod knn;
mod lda;
mod linear;
mod tree;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bayes::GaussianNb;
pub use data::SparseVec;
pub use knn::NearestNeighbours;
pub use linear::LinearModel;
pub use tree::{Forest, Tree};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    RandomForest,
    DecisionTree,
    NaiveBayes,
    LinearSvm,
    NearestNeighbour,
    LogisticRegression,
    Lda,
    Perceptron,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 8] = [
        ClassifierKind::RandomForest,
        ClassifierKind::DecisionTree,
        ClassifierKind::NaiveBayes,
        ClassifierKind::LinearSvm,
        ClassifierKind::NearestNeighbour,
        ClassifierKind::LogisticRegression,
        ClassifierKind::Lda,
        ClassifierKind::Perceptron,
    ];

    /// Short command-line name.
    pub fn code(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::DecisionTree => "dt",
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::LinearSvm => "svm",
            ClassifierKind::NearestNeighbour => "knn",
            ClassifierKind::LogisticRegression => "lr",
            ClassifierKind::Lda => "lda",
            ClassifierKind::Perceptron => "perceptron",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "Random Forest",
            ClassifierKind::DecisionTree => "Decision Tree",
            ClassifierKind::NaiveBayes => "Naive Bayes",
            ClassifierKind::LinearSvm => "SVM",
            ClassifierKind::NearestNeighbour => "Nearest Neighbour",
            ClassifierKind::LogisticRegression => "Logistic Regression",
            ClassifierKind::Lda => "LDA",
            ClassifierKind::Perceptron => "Perceptron",
        }
    }

    /// True for kinds whose score is a probability-like value in [0, 1].
    pub fn scores_probabilities(self) -> bool {
        !matches!(
            self,
            ClassifierKind::LinearSvm | ClassifierKind::Lda | ClassifierKind::Perceptron
        )
    }

    pub fn threshold(self) -> f64 {
        if self.scores_probabilities() {
            0.5
        } else {
            0.0
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let kind = match s.as_str() {
            "rf" | "random-forest" | "random_forest" => ClassifierKind::RandomForest,
            "dt" | "decision-tree" | "decision_tree" => ClassifierKind::DecisionTree,
            "nb" | "naive-bayes" | "naive_bayes" => ClassifierKind::NaiveBayes,
            "svm" | "linear-svm" | "linear_svm" => ClassifierKind::LinearSvm,
            "knn" | "nn" | "nearest-neighbour" | "nearest_neighbour" => ClassifierKind::NearestNeighbour,
            "lr" | "logistic-regression" | "logistic_regression" => ClassifierKind::LogisticRegression,
            "lda" => ClassifierKind::Lda,
            "perceptron" => ClassifierKind::Perceptron,
            _ => return Err(format!("unknown classifier `{s}`")),
        };
        Ok(kind)
    }
}

/// Per-kind hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    RandomForest {
        n_trees: usize,
        /// Features examined per split; `None` means `floor(log2(d)) + 1`.
        max_features: Option<usize>,
        max_depth: Option<usize>,
    },
    DecisionTree {
        max_depth: Option<usize>,
        min_samples_split: usize,
    },
    NaiveBayes {
        /// Added to every variance, as a fraction of the largest feature
        /// variance in the training set.
        var_smoothing: f64,
        /// Lower bound on the added variance.
        var_floor: f64,
    },
    LinearSvm {
        c: f64,
        max_epochs: usize,
        tol: f64,
    },
    NearestNeighbour {
        k: usize,
    },
    LogisticRegression {
        c: f64,
        tol: f64,
        max_iter: usize,
    },
    Lda {
        ridge: f64,
    },
    Perceptron {
        learning_rate: f64,
        max_epochs: usize,
    },
}

impl Hyperparameters {
    pub fn defaults(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::RandomForest => Hyperparameters::RandomForest {
                n_trees: 100,
                max_features: None,
                max_depth: None,
            },
            ClassifierKind::DecisionTree => Hyperparameters::DecisionTree {
                max_depth: None,
                min_samples_split: 2,
            },
            ClassifierKind::NaiveBayes => Hyperparameters::NaiveBayes {
                var_smoothing: 1e-9,
                var_floor: 1e-9,
            },
            ClassifierKind::LinearSvm => Hyperparameters::LinearSvm {
                c: 1.0,
                max_epochs: 5000,
                tol: 1e-4,
            },
            ClassifierKind::NearestNeighbour => Hyperparameters::NearestNeighbour { k: 1 },
            ClassifierKind::LogisticRegression => Hyperparameters::LogisticRegression {
                c: 1.0,
                tol: 1e-6,
                max_iter: 1000,
            },
            ClassifierKind::Lda => Hyperparameters::Lda { ridge: 1e-4 },
            ClassifierKind::Perceptron => Hyperparameters::Perceptron {
                learning_rate: 1.0,
                max_epochs: 1000,
            },
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::RandomForest { .. } => ClassifierKind::RandomForest,
            Hyperparameters::DecisionTree { .. } => ClassifierKind::DecisionTree,
            Hyperparameters::NaiveBayes { .. } => ClassifierKind::NaiveBayes,
            Hyperparameters::LinearSvm { .. } => ClassifierKind::LinearSvm,
            Hyperparameters::NearestNeighbour { .. } => ClassifierKind::NearestNeighbour,
            Hyperparameters::LogisticRegression { .. } => ClassifierKind::LogisticRegression,
            Hyperparameters::Lda { .. } => ClassifierKind::Lda,
            Hyperparameters::Perceptron { .. } => ClassifierKind::Perceptron,
        }
    }
}

/// A classifier kind, its hyperparameters and the seed for any randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            params: Hyperparameters::defaults(kind),
            seed,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Parameters {
    RandomForest(Forest),
    DecisionTree(Tree),
    NaiveBayes(GaussianNb),
    LinearSvm(LinearModel),
    NearestNeighbour(NearestNeighbours),
    LogisticRegression(LinearModel),
    Lda(LinearModel),
    Perceptron(LinearModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub flaky: usize,
    pub non_flaky: usize,
}

/// What happened during training. The wall-clock duration is kept out of
/// serialized models so that model files are reproducible, and is ignored
/// by equality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingInfo {
    /// Epochs or iterations used by iterative learners.
    pub iterations: Option<usize>,
    /// False when an iterative learner stopped at its iteration cap.
    pub converged: bool,
    #[serde(skip)]
    pub duration: Duration,
}

impl PartialEq for TrainingInfo {
    fn eq(&self, other: &Self) -> bool {
        self.iterations == other.iterations && self.converged == other.converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

/// A fitted classifier bound to a feature width and vocabulary fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    /// Fingerprint of the vocabulary the training rows were built with.
    pub fingerprint: String,
    pub width: usize,
    pub threshold: f64,
    pub classes: ClassCounts,
    pub training: TrainingInfo,
    params: Parameters,
}

fn check_width(expected: usize, x: &SparseVec) -> Result<()> {
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.dim(),
        });
    }
    Ok(())
}

/// Trains a classifier. Rows must share one width and both labels must be
/// present; unknown labels are rejected.
pub fn train(spec: &ClassifierSpec, x: &[SparseVec], y: &[Label]) -> Result<TrainedModel> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if y.contains(&Label::Unknown) {
        return Err(Error::UnlabeledTraining);
    }
    let flaky = y.iter().filter(|l| l.is_flaky()).count();
    if flaky == 0 || flaky == y.len() {
        return Err(Error::SingleClassTraining);
    }
    let width = x[0].dim();
    for row in x {
        check_width(width, row)?;
    }

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].cmp(&y[b])));
    let rows: Vec<SparseVec> = order.iter().map(|&i| x[i].clone()).collect();
    let flags: Vec<bool> = order.iter().map(|&i| y[i].is_flaky()).collect();

    let started = Instant::now();
    let seed = spec.seed;
    let (params, iterations, converged) = match spec.params {
        Hyperparameters::RandomForest {
            n_trees,
            max_features,
            max_depth,
        } => {
            let max_features = max_features.unwrap_or_else(|| default_max_features(width));
            let p = tree::TreeParams {
                max_depth,
                min_samples_split: 2,
                max_features: Some(max_features.max(1)),
            };
            (Parameters::RandomForest(Forest::grow(&rows, &flags, n_trees, p, seed)), None, true)
        }
        Hyperparameters::DecisionTree {
            max_depth,
            min_samples_split,
        } => {
            let p = tree::TreeParams {
                max_depth,
                min_samples_split,
                max_features: None,
            };
            let weights = vec![1.0; rows.len()];
            (Parameters::DecisionTree(Tree::grow(&rows, &flags, &weights, p, None)), None, true)
        }
        Hyperparameters::NaiveBayes {
            var_smoothing,
            var_floor,
        } => (
            Parameters::NaiveBayes(GaussianNb::fit(&rows, &flags, var_smoothing, var_floor)),
            None,
            true,
        ),
        Hyperparameters::LinearSvm { c, max_epochs, tol } => {
            let (m, fit) = linear::linear_svm(&rows, &flags, c, max_epochs, tol, seed);
            (Parameters::LinearSvm(m), Some(fit.iterations), fit.converged)
        }
        Hyperparameters::NearestNeighbour { k } => (
            Parameters::NearestNeighbour(NearestNeighbours::fit(&rows, &flags, k)),
            None,
            true,
        ),
        Hyperparameters::LogisticRegression { c, tol, max_iter } => {
            let (m, fit) = linear::logistic_regression(&rows, &flags, c, tol, max_iter);
            (Parameters::LogisticRegression(m), Some(fit.iterations), fit.converged)
        }
        Hyperparameters::Lda { ridge } => (
            Parameters::Lda(lda::fit(&rows, &flags, ridge, lda::Route::Auto)),
            None,
            true,
        ),
        Hyperparameters::Perceptron {
            learning_rate,
            max_epochs,
        } => {
            let (m, fit) = linear::perceptron(&rows, &flags, learning_rate, max_epochs, seed);
            (Parameters::Perceptron(m), Some(fit.iterations), fit.converged)
        }
    };
    if !converged {
        log::info!(
            "{} stopped at its iteration cap ({:?}) without converging",
            spec.kind().title(),
            iterations
        );
    }
    Ok(TrainedModel {
        spec: spec.clone(),
        fingerprint: String::new(),
        width,
        threshold: spec.kind().threshold(),
        classes: ClassCounts {
            flaky,
            non_flaky: y.len() - flaky,
        },
        training: TrainingInfo {
            iterations,
            converged,
            duration: started.elapsed(),
        },
        params,
    })
}

/// `floor(log2(d)) + 1` candidate features per random-forest split.
pub fn default_max_features(width: usize) -> usize {
    if width <= 1 {
        1
    } else {
        (width as f64).log2().floor() as usize + 1
    }
}

impl TrainedModel {
    /// Binds the model to a vocabulary fingerprint.
    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>) -> Self {
        self.fingerprint = fingerprint.into();
        self
    }

    pub fn kind(&self) -> ClassifierKind {
        self.spec.kind()
    }

    fn raw_score(&self, x: &SparseVec) -> f64 {
        match &self.params {
            Parameters::RandomForest(f) => f.vote_fraction(x),
            Parameters::DecisionTree(t) => t.leaf_value(x),
            Parameters::NaiveBayes(nb) => nb.posterior(x),
            Parameters::NearestNeighbour(knn) => knn.flaky_fraction(x),
            Parameters::LogisticRegression(m) => linear::logistic(m.decision(x)),
            Parameters::LinearSvm(m) | Parameters::Lda(m) | Parameters::Perceptron(m) => m.decision(x),
        }
    }

    pub fn score(&self, x: &SparseVec) -> Result<f64> {
        check_width(self.width, x)?;
        Ok(self.raw_score(x))
    }

    pub fn label_for(&self, score: f64) -> Label {
        if score >= self.threshold {
            Label::Flaky
        } else {
            Label::NonFlaky
        }
    }

    pub fn predict(&self, x: &SparseVec) -> Result<Prediction> {
        let score = self.score(x)?;
        Ok(Prediction {
            label: self.label_for(score),
            score,
        })
    }

    pub fn score_batch(&self, x: &[SparseVec]) -> Result<Vec<f64>> {
        x.par_iter().map(|r| self.score(r)).collect()
    }

    pub fn predict_batch(&self, x: &[SparseVec]) -> Result<Vec<Prediction>> {
        x.par_iter().map(|r| self.predict(r)).collect()
    }

    /// Linear weights and bias, for the kinds that have them.
    pub fn linear(&self) -> Option<&LinearModel> {
        match &self.params {
            Parameters::LinearSvm(m)
            | Parameters::LogisticRegression(m)
            | Parameters::Lda(m)
            | Parameters::Perceptron(m) => Some(m),
            _ => None,
        }
    }

    pub fn forest(&self) -> Option<&Forest> {
        match &self.params {
            Parameters::RandomForest(f) => Some(f),
            _ => None,
        }
    }

    pub fn tree(&self) -> Option<&Tree> {
        match &self.params {
            Parameters::DecisionTree(t) => Some(t),
            _ => None,
        }
    }

    pub fn naive_bayes(&self) -> Option<&GaussianNb> {
        match &self.params {
            Parameters::NaiveBayes(nb) => Some(nb),
            _ => None,
        }
    }
}
