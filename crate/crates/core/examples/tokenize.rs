//! Runs the text pipeline stage by stage on a Java test body.
//!
//!     cargo run --example tokenize

use flakelex::textpipe::{run_pipeline, split_identifier_str, stem_word, tokenize_raw_str, PipelineConfig};

const BODY: &str = r#"@Test
public void testCoordJobStatus() throws Exception {
    CoordinatorJobBean coordJob = addRecordToCoordJobTable(CoordinatorJob.Status.RUNNING);
    Thread.sleep(2000);
    assertEquals(CoordinatorJob.Status.SUCCEEDED, coordJob.getStatus());
}"#;

fn show(label: &str, tokens: impl IntoIterator<Item = impl AsRef<str>>) {
    let joined: Vec<String> = tokens.into_iter().map(|t| t.as_ref().to_string()).collect();
    println!("{label:<22} {}", joined.join(" "));
}

fn main() {
    show("delimiter split", tokenize_raw_str(BODY));
    show("identifier split", split_identifier_str("addRecordToCoordJobTable"));
    show("acronyms", split_identifier_str("HTTPServer2"));
    show("stems", ["services", "running", "status", "coordinator"].map(stem_word));

    let stages = [
        ("raw", PipelineConfig::none()),
        ("split only", PipelineConfig::only_split()),
        ("split + lower", PipelineConfig { lowercase: true, ..PipelineConfig::only_split() }),
        ("no stop-word removal", PipelineConfig { remove_stop_words: false, ..PipelineConfig::full() }),
        ("full", PipelineConfig::full()),
    ];
    println!();
    for (name, cfg) in stages {
        show(name, run_pipeline(&cfg, BODY));
    }
}
