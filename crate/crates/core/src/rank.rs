//! Information-gain ranking of token, keyword and LOC features against the
//! flaky label.
//!
//! Tokens and keywords are binarized by presence (a test either contains the
//! feature or not); `loc` is discretized into quartile bins computed on the
//! ranked corpus. Gains are in bits, so they never exceed the label entropy.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::featurize::{apply_ablation, count_java_keywords, measure_loc, AblationConfig, JAVA_KEYWORDS};
use crate::textpipe::run_pipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    /// Token text, `<keyword>_keyword`, or `loc`.
    pub feature: String,
    pub info_gain: f64,
    /// Tests containing the feature; `None` for `loc`.
    pub n_tests: Option<usize>,
    pub n_flaky: Option<usize>,
    pub n_nonflaky: Option<usize>,
}

fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Gain from a contingency table given as `(flaky, non-flaky)` counts per
/// feature value.
pub fn info_gain_from_table(table: &[(usize, usize)]) -> f64 {
    let flaky: usize = table.iter().map(|t| t.0).sum();
    let other: usize = table.iter().map(|t| t.1).sum();
    let n = (flaky + other) as f64;
    let prior = entropy(&[flaky as f64, other as f64]);
    let conditional: f64 = table
        .iter()
        .map(|&(f, o)| (f + o) as f64 / n * entropy(&[f as f64, o as f64]))
        .sum();
    (prior - conditional).max(0.0)
}

fn check_labels(labels: &[Label]) -> Result<()> {
    let flaky = labels.iter().filter(|l| l.is_flaky()).count();
    if flaky == 0 || flaky == labels.len() {
        return Err(Error::SingleClassLabels);
    }
    Ok(())
}

/// `H(label) - H(label | presence)` in bits.
pub fn info_gain(presence: &[bool], labels: &[Label]) -> Result<f64> {
    let categories: Vec<usize> = presence.iter().map(|&p| p as usize).collect();
    info_gain_categorical(&categories, labels)
}

/// Gain of an arbitrary discrete feature.
pub fn info_gain_categorical(categories: &[usize], labels: &[Label]) -> Result<f64> {
    if categories.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: categories.len(),
            right: labels.len(),
        });
    }
    check_labels(labels)?;
    let mut table: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (&c, l) in categories.iter().zip(labels) {
        let e = table.entry(c).or_default();
        if l.is_flaky() {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    Ok(info_gain_from_table(&table.into_values().collect::<Vec<_>>()))
}

/// Lower quartile, median and upper quartile by the lower nearest-rank rule.
pub fn quartile_cuts(values: &[u32]) -> [u32; 3] {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n == 0 {
        return [0; 3];
    }
    let at = |k: usize| sorted[(k * n / 4).min(n - 1)];
    [at(1), at(2), at(3)]
}

/// Bin index in `0..=3`: the number of cuts strictly below `value`.
pub fn quartile_bin(value: u32, cuts: &[u32; 3]) -> usize {
    cuts.iter().filter(|&&c| value > c).count()
}

/// Ranks every feature of the corpus by information gain and returns the
/// best `k`, highest gain first; equal gains are ordered by feature name.
pub fn rank_features(corpus: &Corpus, ablation: AblationConfig, k: usize) -> Result<Vec<FeatureStat>> {
    let labels = corpus.labels();
    if labels.contains(&Label::Unknown) {
        return Err(Error::UnlabeledTraining);
    }
    check_labels(&labels)?;
    let (pipeline, mask) = apply_ablation(ablation);
    let total_flaky = corpus.count(Label::Flaky);
    let total_other = corpus.len() - total_flaky;

    let mut presence: HashMap<String, (usize, usize)> = HashMap::new();
    let mut bump = |name: String, flaky: bool| {
        let e = presence.entry(name).or_default();
        if flaky {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    };
    for case in corpus {
        let flaky = case.label.is_flaky();
        if mask.tokens {
            let tokens: BTreeSet<String> = run_pipeline(&pipeline, &case.body)
                .into_iter()
                .map(|t| t.into_string())
                .collect();
            for t in tokens {
                bump(t, flaky);
            }
        }
        if mask.keywords {
            let (counts, _) = count_java_keywords(&case.body);
            for (kw, n) in JAVA_KEYWORDS.iter().zip(counts) {
                if n > 0 {
                    bump(format!("{kw}_keyword"), flaky);
                }
            }
        }
    }

    let mut stats: Vec<FeatureStat> = presence
        .into_iter()
        .map(|(feature, (f, o))| {
            let table = [(f, o), (total_flaky - f, total_other - o)];
            FeatureStat {
                feature,
                info_gain: info_gain_from_table(&table),
                n_tests: Some(f + o),
                n_flaky: Some(f),
                n_nonflaky: Some(o),
            }
        })
        .collect();
    if mask.keywords {
        // Keywords absent from every test still compete, with zero gain.
        for kw in JAVA_KEYWORDS {
            let name = format!("{kw}_keyword");
            if !stats.iter().any(|s| s.feature == name) {
                stats.push(FeatureStat {
                    feature: name,
                    info_gain: 0.0,
                    n_tests: Some(0),
                    n_flaky: Some(0),
                    n_nonflaky: Some(0),
                });
            }
        }
    }
    if mask.loc {
        let locs: Vec<u32> = corpus.iter().map(|c| measure_loc(&c.body)).collect();
        let cuts = quartile_cuts(&locs);
        let bins: Vec<usize> = locs.iter().map(|&v| quartile_bin(v, &cuts)).collect();
        stats.push(FeatureStat {
            feature: "loc".to_string(),
            info_gain: info_gain_categorical(&bins, &labels)?,
            n_tests: None,
            n_flaky: None,
            n_nonflaky: None,
        });
    }
    stats.sort_by(|a, b| {
        b.info_gain
            .total_cmp(&a.info_gain)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    stats.truncate(k);
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedFeature {
    pub feature: String,
    /// 1-based positions.
    pub rank_a: usize,
    pub rank_b: usize,
    /// `rank_b - rank_a`.
    pub displacement: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingOverlap {
    pub k: usize,
    pub overlap: usize,
    pub shared: Vec<SharedFeature>,
    pub only_a: Vec<String>,
    pub only_b: Vec<String>,
}

/// Compares the top `k` of two rankings.
pub fn compare_rankings<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B], k: usize) -> RankingOverlap {
    let top_a: Vec<&str> = a.iter().take(k).map(AsRef::as_ref).collect();
    let top_b: Vec<&str> = b.iter().take(k).map(AsRef::as_ref).collect();
    let pos_b: HashMap<&str, usize> = top_b.iter().enumerate().map(|(i, f)| (*f, i + 1)).collect();
    let mut shared = Vec::new();
    let mut only_a = Vec::new();
    for (i, f) in top_a.iter().enumerate() {
        match pos_b.get(f) {
            Some(&rb) => shared.push(SharedFeature {
                feature: f.to_string(),
                rank_a: i + 1,
                rank_b: rb,
                displacement: rb as i64 - (i + 1) as i64,
            }),
            None => only_a.push(f.to_string()),
        }
    }
    let in_a: BTreeSet<&str> = top_a.iter().copied().collect();
    let only_b = top_b.iter().filter(|f| !in_a.contains(*f)).map(|f| f.to_string()).collect();
    RankingOverlap {
        k,
        overlap: shared.len(),
        shared,
        only_a,
        only_b,
    }
}

/// Feature names of a ranking, in order.
pub fn feature_names(stats: &[FeatureStat]) -> Vec<&str> {
    stats.iter().map(|s| s.feature.as_str()).collect()
}
