//! Static flaky-test prediction from test-code vocabulary.
//!
//! A corpus of labeled Java test methods is tokenized ([`textpipe`]), turned
//! into token-count and code-complexity features ([`featurize`]), and used to
//! train one of eight classifiers ([`learn`]). [`metrics`] scores held-out
//! predictions, [`rank`] orders features by information gain, and
//! [`experiment`] wires everything into the standard experiments.
//!
//! ```no_run
//! use flakelex::corpus::{load_corpus, stratified_split, CorpusFormat};
//! use flakelex::featurize::AblationConfig;
//! use flakelex::learn::{ClassifierKind, ClassifierSpec};
//! use flakelex::model::fit;
//!
//! # fn main() -> flakelex::Result<()> {
//! let path = std::path::Path::new("tests.csv");
//! let corpus = load_corpus(path, CorpusFormat::from_path(path))?;
//! let (train, test) = stratified_split(&corpus, 0.8, 42)?;
//! let spec = ClassifierSpec::new(ClassifierKind::RandomForest, 42);
//! let bundle = fit(&train, AblationConfig::AllFeatures, &spec)?;
//! println!("{}", bundle.evaluate(&test)?.to_json());
//! # Ok(())
//! # }
//! ```

pub mod config;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod featurize;
pub mod io;
pub mod learn;
pub mod metrics;
pub mod model;
pub mod rank;
pub mod table;
pub mod textpipe;

pub use error::{Error, Result};
