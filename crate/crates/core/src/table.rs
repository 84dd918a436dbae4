//! Result tables rendered as CSV for machines and aligned text for people.

use crate::error::Result;
use crate::featurize::AblationConfig;
use crate::learn::ClassifierKind;
use crate::metrics::{EvalReport, RecallReport};
use crate::rank::FeatureStat;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Printed under the text form only.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// First column left-aligned, the rest right-aligned.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        let rule: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
        }
        for n in &self.notes {
            out.push_str(n);
            out.push('\n');
        }
        out
    }
}

const UNDEFINED_NOTE: &str = "* undefined (zero denominator), reported as 0";

fn cell(value: f64, undefined: bool, decimals: usize) -> String {
    let mark = if undefined { "*" } else { "" };
    format!("{value:.decimals$}{mark}")
}

fn metric_cells(r: &EvalReport, decimals: usize, marks: bool) -> Vec<String> {
    let undef = |name: &str| marks && r.undefined.contains(&name);
    let auc = match r.auc {
        Some(a) => format!("{a:.decimals$}"),
        None if marks => "n/a".to_string(),
        None => String::new(),
    };
    vec![
        cell(r.precision, undef("precision"), decimals),
        cell(r.recall, undef("recall"), decimals),
        cell(r.f1, undef("f1"), decimals),
        cell(r.mcc, undef("mcc"), decimals),
        auc,
        r.confusion.tp.to_string(),
        r.confusion.fp.to_string(),
        r.confusion.fn_.to_string(),
        r.confusion.tn.to_string(),
    ]
}

const METRIC_HEADERS: [&str; 9] = ["precision", "recall", "f1", "mcc", "auc", "tp", "fp", "fn", "tn"];

/// Classifier performance. `text` selects display names and the undefined
/// markers; otherwise codes and an `undefined` column are used.
pub fn report_table(reports: &[EvalReport], text: bool) -> Table {
    let mut headers = vec!["classifier"];
    headers.extend(METRIC_HEADERS);
    if !text {
        headers.push("undefined");
    }
    let mut t = Table::new(headers);
    for r in reports {
        let name = if text { r.classifier.title() } else { r.classifier.code() };
        let mut row = vec![name.to_string()];
        row.extend(metric_cells(r, if text { 4 } else { 6 }, text));
        if !text {
            row.push(r.undefined.join(";"));
        }
        t.push(row);
    }
    if text && reports.iter().any(|r| !r.undefined.is_empty()) {
        t.notes.push(UNDEFINED_NOTE.to_string());
    }
    t
}

/// One row per ablation and classifier, in the given order.
pub fn ablation_table(rows: &[(AblationConfig, EvalReport)], text: bool) -> Table {
    let mut headers = vec!["ablation", "classifier"];
    headers.extend(METRIC_HEADERS);
    if !text {
        headers.push("undefined");
    }
    let mut t = Table::new(headers);
    for (a, r) in rows {
        let mut row = if text {
            vec![a.title().to_string(), r.classifier.title().to_string()]
        } else {
            vec![a.name().to_string(), r.classifier.code().to_string()]
        };
        row.extend(metric_cells(r, if text { 4 } else { 6 }, text));
        if !text {
            row.push(r.undefined.join(";"));
        }
        t.push(row);
    }
    if text && rows.iter().any(|(_, r)| !r.undefined.is_empty()) {
        t.notes.push(UNDEFINED_NOTE.to_string());
    }
    t
}

pub fn recall_table(rows: &[(ClassifierKind, RecallReport)], text: bool) -> Table {
    let mut t = Table::new(["classifier", "recall", "tp", "fn"]);
    for (k, r) in rows {
        let name = if text { k.title() } else { k.code() };
        t.push(vec![
            name.to_string(),
            format!("{:.*}", if text { 4 } else { 6 }, r.recall),
            r.tp.to_string(),
            r.fn_.to_string(),
        ]);
    }
    t
}

/// Columns `feature, info_gain, tests, flaky, nonflaky`; frequency cells
/// are empty in CSV (`-` in text) for `loc`.
pub fn ranking_table(stats: &[FeatureStat], text: bool) -> Table {
    let mut t = Table::new(["feature", "info_gain", "tests", "flaky", "nonflaky"]);
    let na = if text { "-" } else { "" };
    let count = |c: Option<usize>| c.map_or_else(|| na.to_string(), |v| v.to_string());
    for s in stats {
        t.push(vec![
            s.feature.clone(),
            format!("{:.*}", if text { 4 } else { 6 }, s.info_gain),
            count(s.n_tests),
            count(s.n_flaky),
            count(s.n_nonflaky),
        ]);
    }
    t
}
