//! Stemmer output against a fixture produced by an independent Porter
//! implementation.

use flakelex::textpipe::stem_word;

#[test]
fn stems_match_reference_fixture() {
    let text = include_str!("data/porter_oracle.tsv");
    let mut checked = 0;
    let mut wrong = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let (word, stem) = line.split_once('\t').expect("word<TAB>stem");
        if stem_word(word) != stem {
            wrong.push(format!("{word}: got {}, want {stem}", stem_word(word)));
        }
        checked += 1;
    }
    assert!(checked >= 500, "fixture too small: {checked}");
    assert!(wrong.is_empty(), "{} mismatches:\n{}", wrong.len(), wrong.join("\n"));
}
