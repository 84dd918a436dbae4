//! The SMART English stop list, embedded verbatim (571 lines; `would` is
//! listed twice in the original, so 570 distinct words).

use std::collections::HashSet;
use std::sync::OnceLock;

const SMART_LIST: &str = include_str!("smart_stopwords.txt");

pub fn stop_words() -> &'static HashSet<&'static str> {
    static WORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| SMART_LIST.lines().filter(|l| !l.is_empty()).collect())
}

pub fn is_stop_word(word: &str) -> bool {
    stop_words().contains(word)
}
