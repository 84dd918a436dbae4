//! Re-runs the held-out evaluation with each preprocessing step or feature
//! family switched off.
//!
//!     cargo run --release --example ablation

use std::path::Path;

use flakelex::corpus::{load_corpus, CorpusFormat};
use flakelex::experiment::ablate;
use flakelex::featurize::apply_ablation;
use flakelex::learn::ClassifierKind;
use flakelex::table::ablation_table;

fn main() -> flakelex::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini-corpus.csv");
    let corpus = load_corpus(&path, CorpusFormat::Csv)?;
    let rows = ablate(&corpus, &[ClassifierKind::RandomForest, ClassifierKind::LinearSvm], 0.8, 42)?;
    print!("{}", ablation_table(&rows, true).to_text());

    println!();
    for (ablation, _) in rows.iter().step_by(2) {
        let (pipeline, mask) = apply_ablation(*ablation);
        println!("{:<24} pipeline {:<22} {:?}", ablation.name(), pipeline.describe(), mask);
    }
    Ok(())
}
