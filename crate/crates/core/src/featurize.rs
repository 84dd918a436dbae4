//! Vocabulary construction and feature vectors.
//!
//! A vector has four families: token counts over the training vocabulary,
//! one count per Java keyword, the keyword total, and lines of code. The
//! dense column layout is `[tokens.., <kw>_keyword x56, keyword_total, loc]`
//! with disabled families left out entirely.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, Label, TestCase};
use crate::error::{Error, Result};
use crate::learn::SparseVec;
use crate::textpipe::{run_pipeline, tokenize_raw_str, PipelineConfig};

/// The 50 reserved words (including `const` and `goto`), the literals
/// `true`/`false`/`null`, and the contextual `var`, `yield`, `record`,
/// in alphabetical order.
pub const JAVA_KEYWORDS: [&str; 56] = [
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "false", "final", "finally",
    "float", "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "null", "package", "private", "protected", "public", "record", "return", "short",
    "static", "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient",
    "true", "try", "var", "void", "volatile", "while", "yield",
];

pub const N_KEYWORDS: usize = JAVA_KEYWORDS.len();

pub fn keyword_index(word: &str) -> Option<usize> {
    JAVA_KEYWORDS.binary_search(&word).ok()
}

/// Whole-word, case-sensitive keyword counts over the raw body.
pub fn count_java_keywords(body: &str) -> ([u32; N_KEYWORDS], u32) {
    let mut counts = [0u32; N_KEYWORDS];
    for word in tokenize_raw_str(body) {
        if let Some(i) = keyword_index(word) {
            counts[i] += 1;
        }
    }
    let total = counts.iter().sum();
    (counts, total)
}

/// Lines holding at least one non-whitespace character.
pub fn measure_loc(body: &str) -> u32 {
    body.lines().filter(|l| !l.trim().is_empty()).count() as u32
}

/// Which feature families enter the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub tokens: bool,
    pub keywords: bool,
    pub loc: bool,
}

impl FeatureMask {
    pub const ALL: FeatureMask = FeatureMask {
        tokens: true,
        keywords: true,
        loc: true,
    };
}

/// One preprocessing or feature-family variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationConfig {
    #[default]
    AllFeatures,
    NoStemming,
    NoStopWordRemoval,
    NoLowercasing,
    NoIdentifierSplit,
    OnlySplitIdentifiers,
    NoLinesOfCode,
    NoJavaKeywords,
    NoIdentifiers,
}

impl AblationConfig {
    /// All variants in reporting order.
    pub const ALL: [AblationConfig; 9] = [
        AblationConfig::AllFeatures,
        AblationConfig::NoStemming,
        AblationConfig::NoStopWordRemoval,
        AblationConfig::NoLowercasing,
        AblationConfig::NoIdentifierSplit,
        AblationConfig::OnlySplitIdentifiers,
        AblationConfig::NoLinesOfCode,
        AblationConfig::NoJavaKeywords,
        AblationConfig::NoIdentifiers,
    ];

    /// Kebab-case identifier used on the command line and in files.
    pub fn name(self) -> &'static str {
        match self {
            AblationConfig::AllFeatures => "all-features",
            AblationConfig::NoStemming => "no-stemming",
            AblationConfig::NoStopWordRemoval => "no-stop-word-removal",
            AblationConfig::NoLowercasing => "no-lowercasing",
            AblationConfig::NoIdentifierSplit => "no-identifier-split",
            AblationConfig::OnlySplitIdentifiers => "only-split-identifiers",
            AblationConfig::NoLinesOfCode => "no-lines-of-code",
            AblationConfig::NoJavaKeywords => "no-java-keywords",
            AblationConfig::NoIdentifiers => "no-identifiers",
        }
    }

    /// Human-readable row title.
    pub fn title(self) -> &'static str {
        match self {
            AblationConfig::AllFeatures => "All Features",
            AblationConfig::NoStemming => "No Stemming",
            AblationConfig::NoStopWordRemoval => "No Stop Words Removal",
            AblationConfig::NoLowercasing => "No Lowercasing",
            AblationConfig::NoIdentifierSplit => "No Identifier Split",
            AblationConfig::OnlySplitIdentifiers => "Only Split Identifiers",
            AblationConfig::NoLinesOfCode => "No Lines of Code",
            AblationConfig::NoJavaKeywords => "No Java Keywords",
            AblationConfig::NoIdentifiers => "No Identifiers",
        }
    }
}

impl fmt::Display for AblationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationConfig {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace('_', "-");
        AblationConfig::ALL
            .into_iter()
            .find(|a| a.name() == wanted)
            .ok_or_else(|| format!("unknown ablation `{s}`"))
    }
}

/// Maps an ablation to its pipeline and feature families.
pub fn apply_ablation(a: AblationConfig) -> (PipelineConfig, FeatureMask) {
    let full = PipelineConfig::full();
    match a {
        AblationConfig::AllFeatures => (full, FeatureMask::ALL),
        AblationConfig::NoStemming => (PipelineConfig { stem: false, ..full }, FeatureMask::ALL),
        AblationConfig::NoStopWordRemoval => (
            PipelineConfig {
                remove_stop_words: false,
                ..full
            },
            FeatureMask::ALL,
        ),
        AblationConfig::NoLowercasing => (PipelineConfig { lowercase: false, ..full }, FeatureMask::ALL),
        AblationConfig::NoIdentifierSplit => (
            PipelineConfig {
                split_identifiers: false,
                ..full
            },
            FeatureMask::ALL,
        ),
        AblationConfig::OnlySplitIdentifiers => (PipelineConfig::only_split(), FeatureMask::ALL),
        AblationConfig::NoLinesOfCode => (
            full,
            FeatureMask {
                loc: false,
                ..FeatureMask::ALL
            },
        ),
        AblationConfig::NoJavaKeywords => (
            full,
            FeatureMask {
                keywords: false,
                ..FeatureMask::ALL
            },
        ),
        AblationConfig::NoIdentifiers => (
            full,
            FeatureMask {
                tokens: false,
                ..FeatureMask::ALL
            },
        ),
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    ablation: AblationConfig,
    tokens: Vec<String>,
    fingerprint: String,
}

/// Frozen token-to-column mapping built from a training corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    ablation: AblationConfig,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    fingerprint: String,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = String;

    fn try_from(r: VocabularyRepr) -> std::result::Result<Self, Self::Error> {
        let v = Vocabulary::from_tokens(r.ablation, r.tokens);
        if v.fingerprint != r.fingerprint {
            return Err(format!(
                "vocabulary fingerprint {} does not match its contents ({})",
                r.fingerprint, v.fingerprint
            ));
        }
        Ok(v)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            ablation: v.ablation,
            tokens: v.tokens,
            fingerprint: v.fingerprint,
        }
    }
}

fn fingerprint(ablation: AblationConfig, tokens: &[String]) -> String {
    let (pipeline, mask) = apply_ablation(ablation);
    let mut h = Sha256::new();
    h.update(b"flakelex-vocabulary-v1\n");
    h.update(ablation.name().as_bytes());
    h.update(format!("\n{}\n{:?}\n", pipeline.describe(), mask).as_bytes());
    for t in tokens {
        h.update(t.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Vocabulary {
    /// Builds a vocabulary from an arbitrary token list; columns follow the
    /// sorted, deduplicated order.
    pub fn from_tokens(ablation: AblationConfig, tokens: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = tokens.into_iter().collect();
        let tokens: Vec<String> = set.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let fingerprint = fingerprint(ablation, &tokens);
        Self {
            ablation,
            tokens,
            index,
            fingerprint,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn ablation(&self) -> AblationConfig {
        self.ablation
    }

    /// Stable hash of the ablation and the ordered token list.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            n_tokens: self.len(),
            mask: apply_ablation(self.ablation).1,
        }
    }

    /// Name of every dense column, in order.
    pub fn column_names(&self) -> Vec<String> {
        let layout = self.layout();
        let mut names = Vec::with_capacity(layout.width());
        if layout.mask.tokens {
            names.extend(self.tokens.iter().cloned());
        }
        if layout.mask.keywords {
            names.extend(JAVA_KEYWORDS.iter().map(|k| format!("{k}_keyword")));
            names.push("keyword_total".to_string());
        }
        if layout.mask.loc {
            names.push("loc".to_string());
        }
        names
    }
}

/// Union of pipeline tokens over the training bodies.
pub fn build_vocabulary(train: &Corpus, ablation: AblationConfig) -> Result<Vocabulary> {
    let (pipeline, mask) = apply_ablation(ablation);
    if !mask.tokens {
        return Ok(Vocabulary::from_tokens(ablation, Vec::new()));
    }
    let per_case: Vec<BTreeSet<String>> = train
        .cases
        .par_iter()
        .map(|c| run_pipeline(&pipeline, &c.body).into_iter().map(|t| t.into_string()).collect())
        .collect();
    let all: BTreeSet<String> = per_case.into_iter().flatten().collect();
    if all.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(Vocabulary::from_tokens(ablation, all))
}

/// Column arrangement implied by a vocabulary size and feature mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub n_tokens: usize,
    pub mask: FeatureMask,
}

impl FeatureLayout {
    pub fn width(&self) -> usize {
        let mut w = 0;
        if self.mask.tokens {
            w += self.n_tokens;
        }
        if self.mask.keywords {
            w += N_KEYWORDS + 1;
        }
        if self.mask.loc {
            w += 1;
        }
        w
    }
}

/// Sparse token counts plus the code-complexity features of one test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    /// Vocabulary column -> multiplicity.
    pub token_counts: BTreeMap<usize, u32>,
    pub keyword_counts: [u32; N_KEYWORDS],
    pub keyword_total: u32,
    pub loc: u32,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    /// Dense-width sparse row for the learners.
    pub fn to_sparse(&self) -> SparseVec {
        let layout = self.layout;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut offset = 0usize;
        if layout.mask.tokens {
            for (&col, &n) in &self.token_counts {
                indices.push(col as u32);
                values.push(n as f64);
            }
            offset += layout.n_tokens;
        }
        if layout.mask.keywords {
            for (i, &n) in self.keyword_counts.iter().enumerate() {
                if n > 0 {
                    indices.push((offset + i) as u32);
                    values.push(n as f64);
                }
            }
            offset += N_KEYWORDS;
            if self.keyword_total > 0 {
                indices.push(offset as u32);
                values.push(self.keyword_total as f64);
            }
            offset += 1;
        }
        if layout.mask.loc && self.loc > 0 {
            indices.push(offset as u32);
            values.push(self.loc as f64);
        }
        SparseVec::new(layout.width(), indices, values).expect("columns are emitted in order")
    }

    pub fn token_sum(&self) -> u64 {
        self.token_counts.values().map(|&n| n as u64).sum()
    }
}

/// Vectorizes one test against a frozen vocabulary.
pub fn vectorize(case: &TestCase, vocab: &Vocabulary, ablation: AblationConfig) -> Result<FeatureVector> {
    if ablation != vocab.ablation {
        return Err(Error::ConfigMismatch {
            expected: vocab.ablation.name().to_string(),
            found: ablation.name().to_string(),
        });
    }
    let (pipeline, mask) = apply_ablation(ablation);
    let mut token_counts = BTreeMap::new();
    if mask.tokens {
        for t in run_pipeline(&pipeline, &case.body) {
            if let Some(col) = vocab.column(t.as_str()) {
                *token_counts.entry(col).or_insert(0u32) += 1;
            }
        }
    }
    let (keyword_counts, keyword_total) = if mask.keywords {
        count_java_keywords(&case.body)
    } else {
        ([0; N_KEYWORDS], 0)
    };
    let loc = if mask.loc { measure_loc(&case.body) } else { 0 };
    Ok(FeatureVector {
        token_counts,
        keyword_counts,
        keyword_total,
        loc,
        layout: vocab.layout(),
    })
}

/// Vectorizes a whole corpus in parallel, preserving order.
pub fn vectorize_corpus(corpus: &Corpus, vocab: &Vocabulary) -> Result<Vec<FeatureVector>> {
    corpus
        .cases
        .par_iter()
        .map(|c| vectorize(c, vocab, vocab.ablation))
        .collect()
}

/// Sparse rows and labels for a corpus, ready for training or scoring.
pub fn design_matrix(corpus: &Corpus, vocab: &Vocabulary) -> Result<(Vec<SparseVec>, Vec<Label>)> {
    let rows = vectorize_corpus(corpus, vocab)?.iter().map(FeatureVector::to_sparse).collect();
    Ok((rows, corpus.labels()))
}

#[derive(Serialize)]
struct MatrixLine<'a> {
    qualified_name: &'a str,
    label: Label,
    loc: Option<u32>,
    keyword_total: Option<u32>,
    kw: BTreeMap<&'static str, u32>,
    tok: BTreeMap<&'a str, u32>,
}

/// One JSON object describing a vector by feature name.
pub fn matrix_line(case: &TestCase, fv: &FeatureVector, vocab: &Vocabulary) -> Result<String> {
    let mask = fv.layout.mask;
    let line = MatrixLine {
        qualified_name: &case.qualified_name,
        label: case.label,
        loc: mask.loc.then_some(fv.loc),
        keyword_total: mask.keywords.then_some(fv.keyword_total),
        kw: JAVA_KEYWORDS
            .iter()
            .zip(fv.keyword_counts)
            .filter(|(_, n)| *n > 0)
            .map(|(k, n)| (*k, n))
            .collect(),
        tok: fv
            .token_counts
            .iter()
            .map(|(&col, &n)| (vocab.tokens[col].as_str(), n))
            .collect(),
    };
    Ok(serde_json::to_string(&line)?)
}
