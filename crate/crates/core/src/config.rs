//! Experiment configuration stored as flat `key = value` text.
//!
//! ```text
//! # comments and blank lines are ignored
//! corpus = msr4flakiness.csv
//! classifiers = rf, svm
//! seed = 42
//! pipeline.stem = false
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::ProjectMode;
use crate::error::{Error, Result};
use crate::featurize::AblationConfig;
use crate::io::read_to_string;
use crate::learn::ClassifierKind;
use crate::textpipe::PipelineConfig;

/// Environment variable naming the directory relative dataset paths are
/// resolved against.
pub const DATA_DIR_ENV: &str = "FLAKELEX_DATA_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Labeled corpus used for training and held-out evaluation.
    pub corpus: Option<PathBuf>,
    /// Flaky-only corpus used by cross-project validation.
    pub validation: Option<PathBuf>,
    pub ablation: AblationConfig,
    /// Classifiers trained by `eval` and `crossval`.
    pub classifiers: Vec<ClassifierKind>,
    /// Classifiers run over every ablation by `ablate`.
    pub ablate_classifiers: Vec<ClassifierKind>,
    pub train_fraction: f64,
    pub seed: u64,
    pub mode: ProjectMode,
    /// Length of info-gain rankings.
    pub top: usize,
    /// Directory that receives reports and tables.
    pub out_dir: PathBuf,
    /// Pipeline used by `tokenize`.
    pub pipeline: PipelineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            validation: None,
            ablation: AblationConfig::AllFeatures,
            classifiers: ClassifierKind::ALL.to_vec(),
            ablate_classifiers: vec![ClassifierKind::RandomForest, ClassifierKind::LinearSvm],
            train_fraction: 0.8,
            seed: 42,
            mode: ProjectMode::Intra,
            top: 20,
            out_dir: PathBuf::from("results"),
            pipeline: PipelineConfig::full(),
        }
    }
}

/// Parses `all` or a comma-separated list of classifier names.
pub fn parse_classifiers(s: &str) -> std::result::Result<Vec<ClassifierKind>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ClassifierKind::ALL.to_vec());
    }
    let kinds = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(ClassifierKind::from_str)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        return Err("empty classifier list".to_string());
    }
    Ok(kinds)
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{s}`")),
    }
}

fn join_codes(kinds: &[ClassifierKind]) -> String {
    kinds.iter().map(|k| k.code()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|m| Error::Config(format!("line {}: {m}", i + 1)))?;
        }
        Ok(cfg)
    }

    /// Assigns one key. Used by the parser and by command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let num_err = |e: &dyn std::fmt::Display| format!("{key}: {e}");
        match key {
            "corpus" => self.corpus = Some(PathBuf::from(value)),
            "validation" => self.validation = Some(PathBuf::from(value)),
            "ablation" => self.ablation = value.parse()?,
            "classifiers" => self.classifiers = parse_classifiers(value)?,
            "ablate_classifiers" => self.ablate_classifiers = parse_classifiers(value)?,
            "train_fraction" => {
                let f: f64 = value.parse().map_err(|e| num_err(&e))?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(format!("train_fraction must lie in (0, 1), got {f}"));
                }
                self.train_fraction = f;
            }
            "seed" => self.seed = value.parse().map_err(|e| num_err(&e))?,
            "mode" => self.mode = value.parse()?,
            "top" => self.top = value.parse().map_err(|e| num_err(&e))?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "pipeline.split_identifiers" => self.pipeline.split_identifiers = parse_bool(value)?,
            "pipeline.lowercase" => self.pipeline.lowercase = parse_bool(value)?,
            "pipeline.remove_stop_words" => self.pipeline.remove_stop_words = parse_bool(value)?,
            "pipeline.stem" => self.pipeline.stem = parse_bool(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Renders every set key; `parse(render())` yields an equal config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.corpus {
            let _ = writeln!(out, "corpus = {}", p.display());
        }
        if let Some(p) = &self.validation {
            let _ = writeln!(out, "validation = {}", p.display());
        }
        let _ = writeln!(out, "ablation = {}", self.ablation.name());
        let _ = writeln!(out, "classifiers = {}", join_codes(&self.classifiers));
        let _ = writeln!(out, "ablate_classifiers = {}", join_codes(&self.ablate_classifiers));
        let _ = writeln!(out, "train_fraction = {}", self.train_fraction);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "mode = {}", self.mode);
        let _ = writeln!(out, "top = {}", self.top);
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let p = &self.pipeline;
        let _ = writeln!(out, "pipeline.split_identifiers = {}", p.split_identifiers);
        let _ = writeln!(out, "pipeline.lowercase = {}", p.lowercase);
        let _ = writeln!(out, "pipeline.remove_stop_words = {}", p.remove_stop_words);
        let _ = writeln!(out, "pipeline.stem = {}", p.stem);
        out
    }
}

/// Resolves a relative dataset path against `FLAKELEX_DATA_DIR` when set.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let d = ExperimentConfig::default();
        assert_eq!((d.train_fraction, d.seed, d.classifiers.len()), (0.8, 42, 8));
        assert_eq!(ExperimentConfig::parse(&d.render()).unwrap(), d);
        assert_eq!(ExperimentConfig::parse("").unwrap(), d);

        let text = "# demo\ncorpus = data/a.csv\nvalidation=v.jsonl\nablation = no_stemming\n\
                    classifiers = rf, LDA\nseed = 7\ntrain_fraction = 0.75\nmode = inter\ntop = 5\n\
                    pipeline.stem = off\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.ablation, AblationConfig::NoStemming);
        assert_eq!(c.classifiers, [ClassifierKind::RandomForest, ClassifierKind::Lda]);
        assert_eq!(c.mode, ProjectMode::Inter);
        assert!(!c.pipeline.stem);
        assert_eq!(ExperimentConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn bad_lines() {
        for text in ["seed 3", "colour = red", "classifiers = rf,xgboost", "train_fraction = 1.5", "pipeline.stem = maybe"] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }
}
