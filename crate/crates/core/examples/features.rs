//! Builds a vocabulary from a training corpus and looks at the feature
//! vectors it produces under a few ablations.
//!
//!     cargo run --example features

use std::path::Path;

use flakelex::corpus::{load_corpus, stratified_split, CorpusFormat};
use flakelex::featurize::{build_vocabulary, matrix_line, vectorize, AblationConfig};

fn main() -> flakelex::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini-corpus.csv");
    let corpus = load_corpus(&path, CorpusFormat::Csv)?;
    let (train, test) = stratified_split(&corpus, 0.8, 42)?;

    println!("{:<40} {:>7} {:>6}", "ablation", "tokens", "width");
    for ablation in AblationConfig::ALL {
        let vocab = build_vocabulary(&train, ablation)?;
        println!("{:<40} {:>7} {:>6}", ablation.title(), vocab.len(), vocab.layout().width());
    }

    // Tokens that only occur in the test split have no column.
    let vocab = build_vocabulary(&train, AblationConfig::AllFeatures)?;
    let case = test.iter().next().expect("test split is not empty");
    let fv = vectorize(case, &vocab, AblationConfig::AllFeatures)?;
    println!("\n{}", case.qualified_name);
    println!("loc {}, keywords {}, token occurrences {}", fv.loc, fv.keyword_total, fv.token_sum());
    println!("{}", matrix_line(case, &fv, &vocab)?);
    println!("fingerprint {}", vocab.fingerprint());
    Ok(())
}
