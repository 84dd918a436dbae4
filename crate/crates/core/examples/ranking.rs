//! Ranks features by information gain and compares two rankings.
//!
//!     cargo run --example ranking

use std::path::Path;

use flakelex::corpus::{load_corpus, CorpusFormat};
use flakelex::featurize::AblationConfig;
use flakelex::rank::{compare_rankings, feature_names, rank_features};
use flakelex::table::ranking_table;

fn main() -> flakelex::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini-corpus.csv");
    let corpus = load_corpus(&path, CorpusFormat::Csv)?;

    let full = rank_features(&corpus, AblationConfig::AllFeatures, 15)?;
    print!("{}", ranking_table(&full, true).to_text());

    // Without stemming, `sleep` and `sleeps` stop sharing a column.
    let unstemmed = rank_features(&corpus, AblationConfig::NoStemming, 15)?;
    let overlap = compare_rankings(&feature_names(&full), &feature_names(&unstemmed), 15);
    println!("\noverlap with the unstemmed ranking: {}/{}", overlap.overlap, overlap.k);
    println!("only stemmed:   {:?}", overlap.only_a);
    println!("only unstemmed: {:?}", overlap.only_b);
    Ok(())
}
