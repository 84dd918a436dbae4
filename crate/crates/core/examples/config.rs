//! Reads an experiment config, overrides one key and writes it back.
//!
//!     cargo run --example config

use flakelex::config::ExperimentConfig;

const TEXT: &str = "\
# replication defaults, except for the classifier list
corpus = msr4flakiness.csv
validation = idflakies.csv
classifiers = rf, svm, lda
pipeline.stem = true
";

fn main() -> flakelex::Result<()> {
    let mut cfg = ExperimentConfig::parse(TEXT)?;
    println!("seed {} train_fraction {} classifiers {:?}", cfg.seed, cfg.train_fraction, cfg.classifiers);
    cfg.set("seed", "7").map_err(flakelex::Error::Config)?;
    let rendered = cfg.render();
    print!("\n{rendered}");
    assert_eq!(ExperimentConfig::parse(&rendered)?, cfg);
    Ok(())
}
