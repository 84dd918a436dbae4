//! Trains a model, saves it, loads it back and scores unlabeled tests.
//!
//!     cargo run --release --example predict

use std::path::Path;

use flakelex::corpus::{load_corpus, Corpus, CorpusFormat, Label, TestCase};
use flakelex::featurize::AblationConfig;
use flakelex::learn::{ClassifierKind, ClassifierSpec};
use flakelex::model::{fit, render_predictions, ModelBundle};

fn main() -> flakelex::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini-corpus.csv");
    let corpus = load_corpus(&path, CorpusFormat::Csv)?;
    let spec = ClassifierSpec::new(ClassifierKind::RandomForest, 42);
    let bundle = fit(&corpus, AblationConfig::AllFeatures, &spec)?;

    let dir = tempfile::tempdir().map_err(|e| flakelex::Error::ModelFormat(e.to_string()))?;
    let model_path = dir.path().join("model.flx");
    bundle.save(&model_path)?;
    let loaded = ModelBundle::load(&model_path)?;
    assert_eq!(loaded, bundle);

    let unseen = Corpus::new(
        vec![
            TestCase::new("demo", "demo.QueueTest.testDrains", Label::Unknown, "queue.start();\nThread.sleep(300);\nassertTrue(queue.isEmpty());"),
            TestCase::new("demo", "demo.MathTest.testGcd", Label::Unknown, "assertEquals(6, MathUtil.gcd(12, 18));"),
        ],
        "unseen",
    );
    print!("{}", render_predictions(&loaded.predict(&unseen)?));
    Ok(())
}
