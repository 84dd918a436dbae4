//! Labeled test corpora: loading, validation, deduplication, stratified
//! splitting and project filtering.
//!
//! The on-disk schema is a four-column table `project,qualified_name,label,body`
//! stored either as RFC-4180 CSV (header required) or as JSON lines with the
//! same four keys. Labels are `flaky`, `non-flaky` or `unknown`, matched
//! case-insensitively.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};

/// Ground-truth (or requested) label of a test method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "flaky")]
    Flaky,
    #[serde(rename = "non-flaky")]
    NonFlaky,
    #[serde(rename = "unknown")]
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Flaky => "flaky",
            Label::NonFlaky => "non-flaky",
            Label::Unknown => "unknown",
        }
    }

    pub fn is_flaky(self) -> bool {
        self == Label::Flaky
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flaky" => Ok(Label::Flaky),
            "non-flaky" => Ok(Label::NonFlaky),
            "unknown" => Ok(Label::Unknown),
            _ => Err(s.to_string()),
        }
    }
}

/// One test method with its provenance and label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub project: String,
    pub qualified_name: String,
    pub label: Label,
    pub body: String,
}

impl TestCase {
    pub fn new(
        project: impl Into<String>,
        qualified_name: impl Into<String>,
        label: Label,
        body: impl Into<String>,
    ) -> Self {
        Self {
            project: project.into(),
            qualified_name: qualified_name.into(),
            label,
            body: body.into(),
        }
    }
}

/// An ordered collection of test cases plus a free-form provenance tag.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub cases: Vec<TestCase>,
    pub origin: String,
}

/// Serialization format of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Picks the format from the file extension; anything but `.jsonl`/`.json`
    /// is treated as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("json") => {
                CorpusFormat::Jsonl
            }
            _ => CorpusFormat::Csv,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}

const COLUMNS: [&str; 4] = ["project", "qualified_name", "label", "body"];

impl Corpus {
    pub fn new(cases: Vec<TestCase>, origin: impl Into<String>) -> Self {
        Self {
            cases,
            origin: origin.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TestCase> {
        self.cases.iter()
    }

    /// Distinct project identifiers, in sorted order.
    pub fn projects(&self) -> BTreeSet<&str> {
        self.cases.iter().map(|c| c.project.as_str()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.cases.iter().filter(|c| c.label == label).count()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.cases.iter().map(|c| c.label).collect()
    }

    /// Checks the training-corpus invariants: no unknown labels and at least
    /// one case of each class.
    pub fn ensure_trainable(&self) -> Result<()> {
        if self.count(Label::Unknown) > 0 {
            return Err(Error::UnlabeledTraining);
        }
        if self.count(Label::Flaky) == 0 || self.count(Label::NonFlaky) == 0 {
            return Err(Error::SingleClassTraining);
        }
        Ok(())
    }

    /// True when the corpus holds as many non-flaky as flaky tests. Reported,
    /// never enforced.
    pub fn is_balanced(&self) -> bool {
        self.count(Label::Flaky) == self.count(Label::NonFlaky)
    }

    fn retain_indices(&self, keep: &[bool], origin: String) -> Corpus {
        let cases = self
            .cases
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        Corpus { cases, origin }
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a TestCase;
    type IntoIter = std::slice::Iter<'a, TestCase>;

    fn into_iter(self) -> Self::IntoIter {
        self.cases.iter()
    }
}

fn validate_case(row: usize, project: &str, name: &str, label: &str, body: &str) -> Result<TestCase> {
    let label: Label = label.parse().map_err(|label| Error::BadLabel { row, label })?;
    if name.trim().is_empty() {
        return Err(Error::EmptyQualifiedName(row));
    }
    if body.trim().is_empty() {
        return Err(Error::EmptyBody(row));
    }
    Ok(TestCase::new(project, name, label, body))
}

/// Loads a corpus file. Rows are numbered from 1, header excluded. The
/// corpus origin is the file name, so reports do not depend on where the
/// dataset lives.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let text = read_to_string(path)?;
    let origin = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    match format {
        CorpusFormat::Csv => parse_csv(&text, origin),
        CorpusFormat::Jsonl => parse_jsonl(&text, origin),
    }
}

/// Parses CSV text with a `project,qualified_name,label,body` header (any
/// column order).
pub fn parse_csv(text: &str, origin: impl Into<String>) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 4];
    for (slot, column) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| Error::MissingColumn(column.to_string()))?;
    }
    let mut cases = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |k: usize| record.get(index[k]).unwrap_or("");
        cases.push(validate_case(row, field(0), field(1), field(2), field(3))?);
    }
    Ok(Corpus::new(cases, origin))
}

/// Parses JSON lines; blank lines are skipped but still counted.
pub fn parse_jsonl(text: &str, origin: impl Into<String>) -> Result<Corpus> {
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            row,
            message: e.to_string(),
        })?;
        let mut fields = [""; 4];
        for (slot, column) in fields.iter_mut().zip(COLUMNS) {
            *slot = value
                .get(column)
                .ok_or_else(|| Error::MissingColumn(column.to_string()))?
                .as_str()
                .ok_or_else(|| Error::MalformedRecord {
                    row,
                    message: format!("`{column}` is not a string"),
                })?;
        }
        cases.push(validate_case(row, fields[0], fields[1], fields[2], fields[3])?);
    }
    Ok(Corpus::new(cases, origin))
}

/// Renders a corpus in the canonical schema.
pub fn render_corpus(corpus: &Corpus, format: CorpusFormat) -> Result<String> {
    match format {
        CorpusFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(COLUMNS)?;
            for c in corpus {
                writer.write_record([c.project.as_str(), &c.qualified_name, c.label.as_str(), &c.body])?;
            }
            let bytes = writer.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
        }
        CorpusFormat::Jsonl => {
            let mut out = String::new();
            for c in corpus {
                out.push_str(&serde_json::to_string(c)?);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<()> {
    write_atomic(path, render_corpus(corpus, format)?.as_bytes())
}

/// Outcome of [`dedupe`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupeReport {
    pub dropped: usize,
    /// Qualified names whose later duplicates carried a different label.
    pub conflicts: Vec<String>,
}

/// Keeps the first occurrence of every qualified name.
pub fn dedupe(corpus: &Corpus) -> (Corpus, DedupeReport) {
    let mut first: HashMap<&str, Label> = HashMap::new();
    let mut report = DedupeReport::default();
    let mut keep = Vec::with_capacity(corpus.len());
    for case in corpus {
        match first.get(case.qualified_name.as_str()) {
            None => {
                first.insert(&case.qualified_name, case.label);
                keep.push(true);
            }
            Some(&label) => {
                if label != case.label && !report.conflicts.contains(&case.qualified_name) {
                    log::warn!(
                        "duplicate `{}` with conflicting labels; keeping `{}`",
                        case.qualified_name,
                        label
                    );
                    report.conflicts.push(case.qualified_name.clone());
                }
                report.dropped += 1;
                keep.push(false);
            }
        }
    }
    (corpus.retain_indices(&keep, corpus.origin.clone()), report)
}

/// Number of training cases taken from a class of size `n`.
pub fn train_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}

/// Splits each class independently: `round(fraction * n)` cases of every
/// label go to the training side, the remainder to the test side. Both
/// halves keep the corpus order.
pub fn stratified_split(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidFraction(train_fraction));
    }
    corpus.ensure_trainable()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; corpus.len()];
    for label in [Label::Flaky, Label::NonFlaky] {
        let mut members: Vec<usize> = (0..corpus.len())
            .filter(|&i| corpus.cases[i].label == label)
            .collect();
        let n = members.len();
        let take = train_count(train_fraction, n);
        if take == 0 || take == n {
            let side = if take == 0 { "train" } else { "test" };
            return Err(Error::DegenerateSplit(format!(
                "{n} {label} case(s) leave the {side} side without {label} tests"
            )));
        }
        members.shuffle(&mut rng);
        for &i in &members[..take] {
            in_train[i] = true;
        }
    }
    let in_test: Vec<bool> = in_train.iter().map(|t| !t).collect();
    Ok((
        corpus.retain_indices(&in_train, format!("{}#train", corpus.origin)),
        corpus.retain_indices(&in_test, format!("{}#test", corpus.origin)),
    ))
}

/// Which side of the project boundary a cross-project validation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectMode {
    /// Keep validation tests from projects seen in the reference corpus.
    Intra,
    /// Keep validation tests from projects absent from the reference corpus.
    Inter,
}

impl FromStr for ProjectMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "intra" => Ok(ProjectMode::Intra),
            "inter" => Ok(ProjectMode::Inter),
            other => Err(format!("unknown project mode `{other}`")),
        }
    }
}

impl fmt::Display for ProjectMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectMode::Intra => "intra",
            ProjectMode::Inter => "inter",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    /// Validation cases dropped because the reference already holds them.
    pub shared_with_reference: usize,
    pub projects: usize,
    pub cases: usize,
}

/// Keeps the validation cases on one side of the project boundary defined by
/// `reference`. Validation cases whose qualified name also appears in the
/// reference are removed first. Projects match by exact string equality.
pub fn project_filter(validation: &Corpus, reference: &Corpus, mode: ProjectMode) -> (Corpus, FilterReport) {
    let known_names: HashSet<&str> = reference.iter().map(|c| c.qualified_name.as_str()).collect();
    let known_projects = reference.projects();
    let mut shared = 0;
    let keep: Vec<bool> = validation
        .iter()
        .map(|c| {
            if known_names.contains(c.qualified_name.as_str()) {
                shared += 1;
                return false;
            }
            let seen = known_projects.contains(c.project.as_str());
            match mode {
                ProjectMode::Intra => seen,
                ProjectMode::Inter => !seen,
            }
        })
        .collect();
    let kept = validation.retain_indices(&keep, format!("{}#{mode}", validation.origin));
    let report = FilterReport {
        shared_with_reference: shared,
        projects: kept.projects().len(),
        cases: kept.len(),
    };
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(project: &str, name: &str, label: Label) -> TestCase {
        TestCase::new(project, name, label, format!("void {name}() {{}}"))
    }

    fn balanced(n: usize) -> Corpus {
        let mut cases = Vec::new();
        for i in 0..n {
            cases.push(case("p", &format!("F{i}"), Label::Flaky));
            cases.push(case("p", &format!("N{i}"), Label::NonFlaky));
        }
        Corpus::new(cases, "test")
    }

    #[test]
    fn parses_three_row_csv() {
        let text = "project,qualified_name,label,body\n\
                    a,a.T.x,flaky,\"x();\"\n\
                    a,a.T.y,FLAKY,\"y();\"\n\
                    b,b.T.z,Non-Flaky,\"int a = 1,\n b = 2;\"\n";
        let c = parse_csv(text, "t").unwrap();
        assert_eq!(c.count(Label::Flaky), 2);
        assert_eq!(c.count(Label::NonFlaky), 1);
        assert_eq!(c.cases[2].body, "int a = 1,\n b = 2;");
    }

    #[test]
    fn bad_label_reports_row() {
        let text = "project,qualified_name,label,body\na,a.x,flaky,x\na,a.y,maybe,y\n";
        match parse_csv(text, "t") {
            Err(Error::BadLabel { row, label }) => {
                assert_eq!(row, 2);
                assert_eq!(label, "maybe");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_empty_body() {
        let err = parse_csv("project,qualified_name,body\na,b,c\n", "t").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "label"));
        let err = parse_csv("project,qualified_name,label,body\na,b,flaky,\"  \"\n", "t").unwrap_err();
        assert!(matches!(err, Error::EmptyBody(1)));
        let err = parse_jsonl("{\"project\":\"a\",\"qualified_name\":\"b\",\"label\":\"flaky\"}\n", "t").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "body"));
    }

    #[test]
    fn header_only_is_empty_but_not_trainable() {
        let c = parse_csv("project,qualified_name,label,body\n", "t").unwrap();
        assert!(c.is_empty());
        assert!(c.ensure_trainable().is_err());
    }

    #[test]
    fn dedupe_first_wins() {
        let a1 = case("p", "A", Label::Flaky);
        let a2 = case("p", "A", Label::NonFlaky);
        let b = case("p", "B", Label::NonFlaky);
        let (c, r) = dedupe(&Corpus::new(vec![a1.clone(), a2, b.clone()], "t"));
        assert_eq!(c.cases, vec![a1, b]);
        assert_eq!(r.dropped, 1);
        assert_eq!(r.conflicts, vec!["A".to_string()]);

        let distinct = balanced(3);
        let (same, r) = dedupe(&distinct);
        assert_eq!(same, distinct);
        assert_eq!(r, DedupeReport::default());
    }

    #[test]
    fn split_counts_and_determinism() {
        let c = balanced(10);
        let (train, test) = stratified_split(&c, 0.8, 7).unwrap();
        assert_eq!((train.count(Label::Flaky), train.count(Label::NonFlaky)), (8, 8));
        assert_eq!((test.count(Label::Flaky), test.count(Label::NonFlaky)), (2, 2));
        let again = stratified_split(&c, 0.8, 7).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.1, test);
    }

    #[test]
    fn split_rejects_degenerate_class() {
        let mut cases = vec![case("p", "F", Label::Flaky)];
        cases.extend((0..100).map(|i| case("p", &format!("N{i}"), Label::NonFlaky)));
        let err = stratified_split(&Corpus::new(cases, "t"), 0.8, 1).unwrap_err();
        assert!(matches!(err, Error::DegenerateSplit(_)));
        assert!(matches!(
            stratified_split(&balanced(4), 1.0, 1),
            Err(Error::InvalidFraction(_))
        ));
    }

    #[test]
    fn filter_intra_and_inter() {
        let validation = Corpus::new(
            vec![
                case("A", "a1", Label::Flaky),
                case("B", "b1", Label::Flaky),
                case("C", "c1", Label::Flaky),
                case("C", "c2", Label::Flaky),
            ],
            "v",
        );
        let reference = Corpus::new(
            vec![case("A", "r1", Label::Flaky), case("B", "r2", Label::NonFlaky)],
            "r",
        );
        let (intra, ri) = project_filter(&validation, &reference, ProjectMode::Intra);
        let (inter, re) = project_filter(&validation, &reference, ProjectMode::Inter);
        assert_eq!(intra.projects().into_iter().collect::<Vec<_>>(), vec!["A", "B"]);
        assert_eq!(inter.projects().into_iter().collect::<Vec<_>>(), vec!["C"]);
        assert_eq!((ri.projects, ri.cases), (2, 2));
        assert_eq!((re.projects, re.cases), (1, 2));
    }

    #[test]
    fn filter_drops_cases_already_in_reference() {
        let validation = Corpus::new(vec![case("A", "same", Label::Flaky), case("A", "new", Label::Flaky)], "v");
        let reference = Corpus::new(vec![case("A", "same", Label::Flaky)], "r");
        let (intra, report) = project_filter(&validation, &reference, ProjectMode::Intra);
        assert_eq!(intra.len(), 1);
        assert_eq!(report.shared_with_reference, 1);
    }
}
