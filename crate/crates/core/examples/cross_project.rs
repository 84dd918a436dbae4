//! Trains on the bundled corpus and measures recall on flaky tests from
//! projects it has seen (intra) and projects it has not (inter).
//!
//!     cargo run --release --example cross_project

use std::path::Path;

use flakelex::corpus::{load_corpus, CorpusFormat, ProjectMode};
use flakelex::experiment::crossval;
use flakelex::learn::ClassifierKind;
use flakelex::table::recall_table;

fn main() -> flakelex::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let training = load_corpus(&data.join("mini-corpus.csv"), CorpusFormat::Csv)?;
    let validation = load_corpus(&data.join("mini-validation.csv"), CorpusFormat::Csv)?;

    for mode in [ProjectMode::Intra, ProjectMode::Inter] {
        let out = crossval(&training, &validation, mode, &ClassifierKind::ALL, 42, 10)?;
        println!(
            "{mode}: {} tests from {} projects ({} already in training)",
            out.filter.cases, out.filter.projects, out.filter.shared_with_reference
        );
        print!("{}", recall_table(&out.recalls, true).to_text());
        let top: Vec<&str> = out.ranking.iter().map(|s| s.feature.as_str()).collect();
        println!("top features: {}\n", top.join(", "));
    }
    Ok(())
}
