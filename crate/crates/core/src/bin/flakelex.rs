use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use flakelex::config::{parse_classifiers, resolve_data_path, ExperimentConfig};
use flakelex::corpus::{dedupe, load_corpus, stratified_split, write_corpus, Corpus, CorpusFormat, Label, ProjectMode};
use flakelex::featurize::{build_vocabulary, matrix_line, vectorize, AblationConfig};
use flakelex::io::write_atomic;
use flakelex::learn::{ClassifierKind, ClassifierSpec};
use flakelex::model::{fit, render_predictions, ModelBundle};
use flakelex::rank::{compare_rankings, feature_names, rank_features};
use flakelex::table::{ablation_table, ranking_table, recall_table, report_table, Table};
use flakelex::textpipe::{run_pipeline, PipelineConfig};
use flakelex::{experiment, Error};

/// Static flaky-test prediction from test-code vocabulary.
#[derive(Parser)]
#[command(name = "flakelex", version)]
struct Cli {
    /// Random seed for splits and stochastic learners [default: 42].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config file (flat `key = value` text).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print machine-readable JSON instead of text tables.
    #[arg(long)]
    json: bool,
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and deduplicate a corpus, optionally writing a normalized copy or a split.
    Ingest(IngestArgs),
    /// Run the text pipeline over a corpus or a snippet.
    Tokenize(TokenizeArgs),
    /// Build a vocabulary and write one sparse feature vector per test.
    Featurize(FeaturizeArgs),
    /// Train one classifier on a whole corpus and save it as a model file.
    Train(TrainArgs),
    /// Evaluate a saved model, or split a corpus and evaluate every classifier.
    Eval(EvalArgs),
    /// Evaluate classifiers under each of the nine feature ablations.
    Ablate(AblateArgs),
    /// Rank features by information gain.
    Rank(RankArgs),
    /// Measure recall on flaky tests from seen or unseen projects.
    Crossval(CrossvalArgs),
    /// Score every test in a corpus with a saved model.
    Predict(PredictArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus file (.csv or .jsonl).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Write the deduplicated corpus here; the extension picks the format.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a stratified train.csv / test.csv pair into this directory.
    #[arg(long)]
    split_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_fraction)]
    train_fraction: Option<f64>,
}

#[derive(Args)]
struct TokenizeArgs {
    #[arg(long, conflicts_with = "text")]
    corpus: Option<PathBuf>,
    /// Tokenize this snippet instead of a corpus.
    #[arg(long)]
    text: Option<String>,
    /// Stream one JSON line of tokens per test.
    #[arg(long)]
    show: bool,
    /// Use the pipeline of this ablation instead of the configured one.
    #[arg(long)]
    ablation: Option<AblationConfig>,
    #[arg(long)]
    no_split: bool,
    #[arg(long)]
    no_lowercase: bool,
    #[arg(long)]
    no_stop_words: bool,
    #[arg(long)]
    no_stem: bool,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Build the vocabulary from this corpus instead of `--corpus`.
    #[arg(long)]
    vocab_from: Option<PathBuf>,
    #[arg(long)]
    ablation: Option<AblationConfig>,
    /// Matrix output (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Also write the vocabulary as JSON.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "rf")]
    classifier: ClassifierKind,
    #[arg(long)]
    ablation: Option<AblationConfig>,
    /// Model file; a `.meta.json` sidecar with timing is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Saved model to evaluate against `--test`.
    #[arg(long, requires = "test", conflicts_with = "corpus")]
    model: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Write the report JSON here (model mode).
    #[arg(long = "json", value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Split this corpus and evaluate every listed classifier.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// `all` or a comma-separated list such as `rf,svm,lda`.
    #[arg(long, value_parser = classifier_list)]
    classifiers: Option<ClassifierList>,
    #[arg(long)]
    ablation: Option<AblationConfig>,
    #[arg(long, value_parser = parse_fraction)]
    train_fraction: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// `all` or a comma-separated list [default: rf,svm].
    #[arg(long, value_parser = classifier_list)]
    classifiers: Option<ClassifierList>,
    #[arg(long, value_parser = parse_fraction)]
    train_fraction: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    ablation: Option<AblationConfig>,
    /// Write the ranking as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Compare against another ranking CSV (its `feature` column).
    #[arg(long)]
    compare: Option<PathBuf>,
}

#[derive(Args)]
struct CrossvalArgs {
    /// Labeled training corpus.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Flaky-only validation corpus.
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long)]
    mode: Option<ProjectMode>,
    #[arg(long, value_parser = classifier_list)]
    classifiers: Option<ClassifierList>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Write predictions here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A parsed `--classifiers` value; a newtype so clap treats the list as one
/// value.
#[derive(Clone)]
struct ClassifierList(Vec<ClassifierKind>);

fn classifier_list(s: &str) -> std::result::Result<ClassifierList, String> {
    parse_classifiers(s).map(ClassifierList)
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let mut cfg = ExperimentConfig::default();
    cfg.set("train_fraction", s)?;
    Ok(cfg.train_fraction)
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config(_)) => Failure::Usage(format!("{e:#}")),
            _ => Failure::Data(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = std::result::Result<(), Failure>;

struct Ctx {
    cfg: ExperimentConfig,
    json: bool,
    quiet: bool,
}

/// Writes to standard output; a closed pipe (`| head`) ends the process
/// quietly instead of panicking.
fn stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing to standard output: {e}");
        std::process::exit(1);
    }
}

impl Ctx {
    fn say(&self, text: &str) {
        if !self.quiet {
            stdout(text);
        }
    }

    fn emit(&self, text: &str, value: &serde_json::Value) {
        if self.json {
            stdout(&pretty(value));
        } else {
            self.say(text);
        }
    }
}

fn required(path: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> std::result::Result<PathBuf, Failure> {
    path.or_else(|| fallback.clone())
        .ok_or_else(|| Failure::Usage(format!("no {what} given (use --{what} or set `{what}` in the config file)")))
}

fn load(path: &Path) -> anyhow::Result<Corpus> {
    let resolved = resolve_data_path(path);
    let corpus = load_corpus(&resolved, CorpusFormat::from_path(&resolved))
        .with_context(|| format!("loading {}", resolved.display()))?;
    let (corpus, report) = dedupe(&corpus);
    if report.dropped > 0 {
        log::info!("{}: dropped {} duplicate tests", corpus.origin, report.dropped);
    }
    for name in &report.conflicts {
        log::warn!("{}: `{name}` appears with conflicting labels; kept the first", corpus.origin);
    }
    Ok(corpus)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_table(dir: &Path, stem: &str, csv: &Table, text: &Table) -> anyhow::Result<()> {
    write(&dir.join(format!("{stem}.csv")), &csv.to_csv()?)?;
    write(&dir.join(format!("{stem}.txt")), &text.to_text())
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json renders") + "\n"
}

fn cmd_ingest(ctx: &Ctx, a: IngestArgs) -> Outcome {
    let corpus = load(&required(a.corpus, &ctx.cfg.corpus, "corpus")?)?;
    let counts = json!({
        "dataset": corpus.origin,
        "tests": corpus.len(),
        "projects": corpus.projects().len(),
        "flaky": corpus.count(Label::Flaky),
        "non_flaky": corpus.count(Label::NonFlaky),
        "unknown": corpus.count(Label::Unknown),
    });
    if let Some(out) = &a.out {
        write_corpus(&corpus, out, CorpusFormat::from_path(out))?;
    }
    if let Some(dir) = &a.split_dir {
        let fraction = a.train_fraction.unwrap_or(ctx.cfg.train_fraction);
        let (train, test) = stratified_split(&corpus, fraction, ctx.cfg.seed)?;
        write_corpus(&train, &dir.join("train.csv"), CorpusFormat::Csv)?;
        write_corpus(&test, &dir.join("test.csv"), CorpusFormat::Csv)?;
    }
    let text = format!(
        "{}: {} tests in {} projects ({} flaky, {} non-flaky, {} unknown)\n",
        corpus.origin,
        corpus.len(),
        corpus.projects().len(),
        corpus.count(Label::Flaky),
        corpus.count(Label::NonFlaky),
        corpus.count(Label::Unknown)
    );
    ctx.emit(&text, &counts);
    Ok(())
}

fn cmd_tokenize(ctx: &Ctx, a: TokenizeArgs) -> Outcome {
    let mut pipeline: PipelineConfig = match a.ablation {
        Some(ab) => flakelex::featurize::apply_ablation(ab).0,
        None => ctx.cfg.pipeline,
    };
    pipeline.split_identifiers &= !a.no_split;
    pipeline.lowercase &= !a.no_lowercase;
    pipeline.remove_stop_words &= !a.no_stop_words;
    pipeline.stem &= !a.no_stem;

    if let Some(text) = a.text {
        let tokens: Vec<String> = run_pipeline(&pipeline, &text).into_iter().map(|t| t.into_string()).collect();
        if ctx.json {
            stdout(&(serde_json::to_string(&tokens).expect("json renders") + "\n"));
        } else {
            stdout(&(tokens.join(" ") + "\n"));
        }
        return Ok(());
    }
    let corpus = load(&required(a.corpus, &ctx.cfg.corpus, "corpus")?)?;
    let mut distinct = std::collections::BTreeSet::new();
    let mut total = 0usize;
    for case in &corpus {
        let tokens = run_pipeline(&pipeline, &case.body);
        total += tokens.len();
        if a.show {
            let line = json!({"qualified_name": case.qualified_name, "tokens": tokens});
            stdout(&format!("{line}\n"));
        }
        distinct.extend(tokens.into_iter().map(|t| t.into_string()));
    }
    if !a.show {
        let text = format!(
            "{} tests, {total} tokens, {} distinct ({})\n",
            corpus.len(),
            distinct.len(),
            pipeline.describe()
        );
        let value = json!({"tests": corpus.len(), "tokens": total, "distinct": distinct.len(), "pipeline": pipeline.describe()});
        ctx.emit(&text, &value);
    }
    Ok(())
}

fn cmd_featurize(ctx: &Ctx, a: FeaturizeArgs) -> Outcome {
    let corpus = load(&required(a.corpus, &ctx.cfg.corpus, "corpus")?)?;
    let ablation = a.ablation.unwrap_or(ctx.cfg.ablation);
    let vocab = match &a.vocab_from {
        Some(p) => build_vocabulary(&load(p)?, ablation)?,
        None => build_vocabulary(&corpus, ablation)?,
    };
    let mut out = String::new();
    for case in &corpus {
        let fv = vectorize(case, &vocab, ablation)?;
        out.push_str(&matrix_line(case, &fv, &vocab)?);
        out.push('\n');
    }
    write(&a.out, &out)?;
    if let Some(p) = &a.vocab_out {
        write(p, &(serde_json::to_string(&vocab).context("serializing vocabulary")? + "\n"))?;
    }
    let width = vocab.layout().width();
    let text = format!("{} rows x {width} columns ({} tokens) -> {}\n", corpus.len(), vocab.len(), a.out.display());
    ctx.emit(&text, &json!({"rows": corpus.len(), "width": width, "tokens": vocab.len(), "fingerprint": vocab.fingerprint()}));
    Ok(())
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> Outcome {
    let corpus = load(&required(a.corpus, &ctx.cfg.corpus, "corpus")?)?;
    let ablation = a.ablation.unwrap_or(ctx.cfg.ablation);
    let spec = ClassifierSpec::new(a.classifier, ctx.cfg.seed);
    let bundle = fit(&corpus, ablation, &spec)?;
    bundle.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;

    let info = &bundle.model.training;
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = json!({
        "classifier": a.classifier.code(),
        "seed": ctx.cfg.seed,
        "ablation": ablation.name(),
        "dataset": corpus.origin,
        "train_size": corpus.len(),
        "fingerprint": bundle.vocabulary.fingerprint(),
        "iterations": info.iterations,
        "converged": info.converged,
        "duration_ms": info.duration.as_secs_f64() * 1e3,
        "created_unix": created,
    });
    let mut meta_path = a.out.clone().into_os_string();
    meta_path.push(".meta.json");
    write(Path::new(&meta_path), &pretty(&meta))?;
    if !info.converged {
        log::warn!("{} stopped at its iteration cap without converging", a.classifier.title());
    }
    let text = format!(
        "trained {} on {} tests ({} features) -> {}\n",
        a.classifier.title(),
        corpus.len(),
        bundle.model.width,
        a.out.display()
    );
    ctx.emit(&text, &meta);
    Ok(())
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> Outcome {
    if let Some(model_path) = a.model {
        let bundle = ModelBundle::load(&model_path).with_context(|| format!("loading {}", model_path.display()))?;
        let test = load(a.test.as_deref().expect("clap enforces --test"))?;
        let report = bundle.evaluate(&test)?;
        let value = report.to_json();
        if let Some(p) = &a.json_out {
            write(p, &pretty(&value))?;
        }
        ctx.emit(&report_table(std::slice::from_ref(&report), true).to_text(), &value);
        return Ok(());
    }
    let corpus = load(&required(a.corpus, &ctx.cfg.corpus, "corpus")?)?;
    let classifiers = a.classifiers.map_or_else(|| ctx.cfg.classifiers.clone(), |l| l.0);
    let ablation = a.ablation.unwrap_or(ctx.cfg.ablation);
    let fraction = a.train_fraction.unwrap_or(ctx.cfg.train_fraction);
    let reports = experiment::train_eval(&corpus, ablation, &classifiers, fraction, ctx.cfg.seed)?;

    let dir = a.out_dir.unwrap_or_else(|| ctx.cfg.out_dir.clone());
    for r in &reports {
        write(&dir.join(format!("report-{}.json", r.classifier.code())), &pretty(&r.to_json()))?;
    }
    let text = report_table(&reports, true);
    write_table(&dir, "classifiers", &report_table(&reports, false), &text)?;
    let value = serde_json::Value::Array(reports.iter().map(|r| r.to_json()).collect());
    if let Some(p) = &a.json_out {
        write(p, &pretty(&value))?;
    }
    ctx.emit(&text.to_text(), &value);
    Ok(())
}

fn cmd_ablate(ctx: &Ctx, a: AblateArgs) -> Outcome {
    let corpus = load(&required(a.corpus, &ctx.cfg.corpus, "corpus")?)?;
    let classifiers = a.classifiers.map_or_else(|| ctx.cfg.ablate_classifiers.clone(), |l| l.0);
    let fraction = a.train_fraction.unwrap_or(ctx.cfg.train_fraction);
    let rows = experiment::ablate(&corpus, &classifiers, fraction, ctx.cfg.seed)?;

    let dir = a.out_dir.unwrap_or_else(|| ctx.cfg.out_dir.clone());
    let text = ablation_table(&rows, true);
    write_table(&dir, "ablation", &ablation_table(&rows, false), &text)?;
    let value = serde_json::Value::Array(
        rows.iter()
            .map(|(ab, r)| {
                let mut v = r.to_json();
                v["ablation"] = ab.name().into();
                v
            })
            .collect(),
    );
    write(&dir.join("ablation.json"), &pretty(&value))?;
    ctx.emit(&text.to_text(), &value);
    Ok(())
}

fn read_feature_column(path: &Path) -> anyhow::Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let col = reader
        .headers()?
        .iter()
        .position(|h| h == "feature")
        .with_context(|| format!("{} has no `feature` column", path.display()))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        out.push(rec?.get(col).unwrap_or_default().to_string());
    }
    Ok(out)
}

fn cmd_rank(ctx: &Ctx, a: RankArgs) -> Outcome {
    let corpus = load(&required(a.corpus, &ctx.cfg.corpus, "corpus")?)?;
    let top = a.top.unwrap_or(ctx.cfg.top);
    let ablation = a.ablation.unwrap_or(ctx.cfg.ablation);
    let stats = rank_features(&corpus, ablation, top)?;
    if let Some(p) = &a.csv {
        write(p, &ranking_table(&stats, false).to_csv()?)?;
    }
    let mut text = ranking_table(&stats, true).to_text();
    let mut value = json!({ "ranking": stats });
    if let Some(p) = &a.compare {
        let other = read_feature_column(p)?;
        let overlap = compare_rankings(&feature_names(&stats), &other, top);
        text.push_str(&format!("\noverlap with {}: {}/{top}\n", p.display(), overlap.overlap));
        for s in &overlap.shared {
            if s.displacement != 0 {
                text.push_str(&format!("  {:<20} {:>3} -> {:>3}\n", s.feature, s.rank_b, s.rank_a));
            }
        }
        value["comparison"] = serde_json::to_value(&overlap).context("serializing overlap")?;
    }
    ctx.emit(&text, &value);
    Ok(())
}

fn cmd_crossval(ctx: &Ctx, a: CrossvalArgs) -> Outcome {
    let training = load(&required(a.train, &ctx.cfg.corpus, "train")?)?;
    let validation = load(&required(a.validation, &ctx.cfg.validation, "validation")?)?;
    let mode = a.mode.unwrap_or(ctx.cfg.mode);
    let classifiers = a.classifiers.map_or_else(|| ctx.cfg.classifiers.clone(), |l| l.0);
    let out = experiment::crossval(&training, &validation, mode, &classifiers, ctx.cfg.seed, ctx.cfg.top)?;

    let dir = a.out_dir.unwrap_or_else(|| ctx.cfg.out_dir.clone());
    let stem = format!("crossval-{mode}");
    let recalls = recall_table(&out.recalls, true);
    write_table(&dir, &stem, &recall_table(&out.recalls, false), &recalls)?;
    let ranking = ranking_table(&out.ranking, true);
    write_table(&dir, &format!("{stem}-ranking"), &ranking_table(&out.ranking, false), &ranking)?;
    let value = serde_json::to_value(&out).context("serializing crossval outcome")?;
    write(&dir.join(format!("{stem}.json")), &pretty(&value))?;

    let text = format!(
        "{mode}-project validation: {} tests from {} projects ({} shared with training dropped)\n\n{}\n{}",
        out.filter.cases,
        out.filter.projects,
        out.filter.shared_with_reference,
        recalls.to_text(),
        ranking.to_text()
    );
    ctx.emit(&text, &value);
    Ok(())
}

fn cmd_predict(ctx: &Ctx, a: PredictArgs) -> Outcome {
    let bundle = ModelBundle::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let corpus = load(&a.corpus)?;
    let lines = render_predictions(&bundle.predict(&corpus)?);
    match &a.out {
        Some(p) => write(p, &lines)?,
        None if !ctx.quiet => stdout(&lines),
        None => {}
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let ctx = Ctx {
        cfg,
        json: cli.json,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&ctx, a),
        Command::Tokenize(a) => cmd_tokenize(&ctx, a),
        Command::Featurize(a) => cmd_featurize(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Ablate(a) => cmd_ablate(&ctx, a),
        Command::Rank(a) => cmd_rank(&ctx, a),
        Command::Crossval(a) => cmd_crossval(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
