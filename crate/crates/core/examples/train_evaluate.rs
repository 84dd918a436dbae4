//! Splits the bundled corpus 80/20, trains every classifier and prints the
//! held-out metrics as a table and as JSON reports.
//!
//!     cargo run --release --example train_evaluate

use std::path::Path;

use flakelex::corpus::{load_corpus, CorpusFormat};
use flakelex::experiment::train_eval;
use flakelex::featurize::AblationConfig;
use flakelex::learn::ClassifierKind;
use flakelex::table::report_table;

fn main() -> flakelex::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini-corpus.csv");
    let corpus = load_corpus(&path, CorpusFormat::Csv)?;
    let reports = train_eval(&corpus, AblationConfig::AllFeatures, &ClassifierKind::ALL, 0.8, 42)?;
    print!("{}", report_table(&reports, true).to_text());
    println!();
    for r in reports.iter().take(2) {
        println!("{}", r.to_json());
    }
    Ok(())
}
