use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use srl_core::corpus::{build_inventory, validate_sentence, Corpus, LabelInventory};
use srl_core::embedder::EmbedderSpec;
use srl_core::evaluator::{evaluate, predict_corpus, render_metrics, render_sweep, run_sweep_with_observer, score};
use srl_core::evaluator::{ReportFormat, SweepSetup, SweepTable};
use srl_core::fixtures::three_token_pair;
use srl_core::model::{DecodeOptions, ModelConfig, SrlModel};
use srl_core::numerics::{GradCheckReport, Precision, Real};
use srl_core::trainer::{build_model, model_grad_check, train_with_observer, TrainHistory};

use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use crate::config::{Overrides, RunConfig, DEFAULT_SEED};
use crate::error::{Error, ExitCode, Result};
use crate::files::{load_embedder_cache, read_corpus, write_text};

#[derive(Debug, Parser)]
#[command(name = "srl", version, about = "Cross-lingual dependency semantic role labeling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse corpora and check every sentence against its label inventory.
    Validate(CorpusArgs),
    /// Print the sense and role inventories of corpora as JSON.
    Inventory(CorpusArgs),
    /// Train a model from a run configuration.
    Train(RunArgs),
    /// Score predictions against a gold corpus.
    Eval(EvalArgs),
    /// Annotate a corpus with a trained model.
    Predict(PredictArgs),
    /// Train once per English share and score each model on the target test set.
    Sweep(SweepArgs),
    /// Finite-difference check of the full model's gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Run configuration whose corpora to read.
    #[arg(long, conflicts_with = "files")]
    config: Option<PathBuf>,
    /// Language code of the positional corpora.
    #[arg(long, default_value = "en")]
    language: String,
    /// CoNLL-2009 files.
    files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let overrides = Overrides {
            seed: self.seed,
            epochs: self.epochs,
            output_dir: self.output_dir.clone(),
        };
        RunConfig::load(&self.config, &overrides)
    }
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Let a predicate take any sense in the inventory.
    #[arg(long)]
    no_lemma_mask: bool,
}

impl DecodeArgs {
    fn options(&self) -> DecodeOptions {
        DecodeOptions {
            lemma_mask: !self.no_lemma_mask,
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Model to predict the gold sentences with.
    #[arg(long, required_unless_present = "pred", conflicts_with = "pred")]
    checkpoint: Option<PathBuf>,
    /// Existing predictions to score instead.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Language of the gold corpus; defaults to the model's only language.
    #[arg(long)]
    language: Option<String>,
    #[arg(long, default_value = "tsv")]
    format: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    decode: DecodeArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    decode: DecodeArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// English shares in percent.
    #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50,60,70,80,90,100")]
    fractions: Vec<u32>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = GRADCHECK_EPS)]
    eps: f64,
    #[arg(long, default_value_t = GRADCHECK_TOLERANCE)]
    tolerance: f64,
}

pub const GRADCHECK_EPS: f64 = 6e-4;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Runs the tool on `argv` (including the program name) and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Usage as i32 } else { ExitCode::Ok as i32 };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::Ok as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate(args) => validate(&args),
        Command::Inventory(args) => inventory(&args),
        Command::Train(args) => train_command(&args),
        Command::Eval(args) => eval(&args),
        Command::Predict(args) => predict(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Gradcheck(args) => gradcheck(&args),
    }
}

/// `(path, corpus)` for every file named by the arguments.
fn corpora_of(args: &CorpusArgs) -> Result<Vec<(PathBuf, Corpus)>> {
    let files: Vec<(PathBuf, String)> = match &args.config {
        Some(config) => {
            let run = RunConfig::load(config, &Overrides::default())?;
            run.data
                .iter()
                .flat_map(|(lang, d)| [&d.train, &d.dev, &d.test].into_iter().flatten().map(|p| (p.clone(), lang.clone())))
                .collect()
        }
        None if args.files.is_empty() => return Err(Error::Usage("no corpus given".into())),
        None => args.files.iter().map(|p| (p.clone(), args.language.clone())).collect(),
    };
    files
        .into_iter()
        .map(|(path, lang)| read_corpus(&path, &lang).map(|c| (path, c)))
        .collect()
}

fn validate(args: &CorpusArgs) -> Result<()> {
    let mut invalid = 0;
    for (path, corpus) in corpora_of(args)? {
        let inv = build_inventory(&corpus).unwrap_or_else(|_| LabelInventory::new(corpus.language.clone()));
        for s in &corpus.sentences {
            let violations = validate_sentence(s, &inv);
            invalid += usize::from(!violations.is_empty());
            for v in violations {
                eprintln!("{}: sentence {}: {v}", path.display(), s.id);
            }
        }
        println!("{}: {} sentences", path.display(), corpus.len());
    }
    if invalid > 0 {
        return Err(Error::Invalid(invalid));
    }
    Ok(())
}

fn inventory(args: &CorpusArgs) -> Result<()> {
    let mut merged: BTreeMap<String, Corpus> = BTreeMap::new();
    for (_, corpus) in corpora_of(args)? {
        let entry = merged.entry(corpus.language.clone()).or_insert_with(|| Corpus::new(corpus.language.clone()));
        entry.sentences.extend(corpus.sentences);
    }
    let inventories: Vec<LabelInventory> = merged
        .values()
        .filter(|c| !c.is_empty())
        .map(|c| build_inventory(c).expect("non-empty"))
        .collect();
    println!("{}", serde_json::to_string_pretty(&inventories).expect("inventories serialize"));
    Ok(())
}

struct Splits {
    train: BTreeMap<String, Corpus>,
    dev: BTreeMap<String, Corpus>,
    test: BTreeMap<String, Corpus>,
}

fn read_splits(config: &RunConfig) -> Result<Splits> {
    let mut splits = Splits {
        train: BTreeMap::new(),
        dev: BTreeMap::new(),
        test: BTreeMap::new(),
    };
    for (lang, paths) in &config.data {
        for (path, out) in [(&paths.train, &mut splits.train), (&paths.dev, &mut splits.dev), (&paths.test, &mut splits.test)] {
            if let Some(p) = path {
                out.insert(lang.clone(), read_corpus(p, lang)?);
            }
        }
    }
    Ok(splits)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_text(path, &text)
}

fn train_command(args: &RunArgs) -> Result<()> {
    let config = args.load()?;
    let splits = read_splits(&config)?;
    let cache = load_embedder_cache(&config.embedder)?;
    write_text(&config.output_dir.join("effective_config.json"), &config.to_json())?;
    match config.train.precision {
        Precision::Standard => train_and_save::<f32>(&config, &splits, cache),
        Precision::High => train_and_save::<f64>(&config, &splits, cache),
    }
}

fn train_and_save<R: Real>(
    config: &RunConfig,
    splits: &Splits,
    cache: Option<srl_core::embedder::EmbeddingCache>,
) -> Result<()> {
    let mut model: SrlModel<R> = build_model(config.model.clone(), &config.embedder, &splits.train, cache)?;
    let history = train_with_observer(&mut model, &config.train, &splits.train, &splits.dev, |r| {
        let dev = r.selection.map_or(String::new(), |s| format!(" dev_f1={s:.2}"));
        eprintln!("epoch {} loss={:.4}{dev}", r.epoch, r.total_loss);
    })?;
    let meta = checkpoint_meta(&history);
    let dir = &config.output_dir;
    save_checkpoint(&model, &meta, &dir.join("model.ckpt"))?;
    write_json(&dir.join("history.json"), &history)?;
    for (lang, test) in &splits.test {
        if model.has_language(lang) {
            let (_, report) = evaluate(&model, test, lang, config.train.decode)?;
            write_text(&dir.join(format!("test.{lang}.json")), &render_metrics(&report, ReportFormat::Json))?;
            println!("{lang}\ttest F1\t{:.2}", report.f1);
        }
    }
    println!("wrote {}", dir.join("model.ckpt").display());
    Ok(())
}

fn checkpoint_meta(history: &TrainHistory) -> CheckpointMeta {
    CheckpointMeta {
        seed: history.seed,
        epochs_run: history.epochs.len(),
        best_epoch: history.best_epoch,
        dev_f1: history.best_selection,
        train_sentences: history.train_sentences.clone(),
    }
}

fn model_language(model: &SrlModel<f32>, requested: Option<&String>) -> Result<String> {
    if let Some(lang) = requested {
        return Ok(lang.clone());
    }
    let langs: Vec<&str> = model.languages().collect();
    match langs.as_slice() {
        [only] => Ok(only.to_string()),
        _ => Err(Error::Usage(format!("--language is required for a model of languages {langs:?}"))),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn eval(args: &EvalArgs) -> Result<()> {
    let report = match (&args.checkpoint, &args.pred) {
        (Some(ckpt), _) => {
            let (model, _) = load_checkpoint(ckpt)?;
            let lang = model_language(&model, args.language.as_ref())?;
            let gold = read_corpus(&args.gold, &lang)?;
            evaluate(&model, &gold, &lang, args.decode.options())?.1
        }
        (None, Some(pred)) => {
            let lang = args.language.clone().unwrap_or_else(|| "und".into());
            let gold = read_corpus(&args.gold, &lang)?;
            score(&gold, &read_corpus(pred, &lang)?)?
        }
        (None, None) => return Err(Error::Usage("eval needs --checkpoint or --pred".into())),
    };
    emit(args.out.as_ref(), &render_metrics(&report, args.format))
}

fn predict(args: &PredictArgs) -> Result<()> {
    let (model, header) = load_checkpoint(&args.checkpoint)?;
    let lang = model_language(&model, args.language.as_ref())?;
    let input = read_corpus(&args.input, &lang)?;
    let pred = predict_corpus(&model, &input, &lang, args.decode.options())?;
    let text = format!("# seed = {}\n{}", header.metadata.seed, srl_core::corpus::write_conll09(&pred));
    emit(args.out.as_ref(), &text)
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut config = args.run.load()?;
    let sweep = config.sweep.get_or_insert_with(Default::default).clone();
    config.validate(&args.run.config)?;
    if let Some(p) = args.fractions.iter().find(|&&p| p > 100) {
        return Err(Error::Usage(format!("percentage {p} above 100")));
    }
    let (src, tgt) = (&sweep.source_language, &sweep.target_language);
    let splits = read_splits(&config)?;
    let take = |m: &BTreeMap<String, Corpus>, lang: &str| m.get(lang).cloned().expect("validated");
    let setup = SweepSetup {
        model: config.model.clone(),
        embedder: config.embedder.clone(),
        train: config.train.clone(),
        source_language: src.clone(),
        target_language: tgt.clone(),
        target_fraction: sweep.target_fraction,
        source_train: take(&splits.train, src),
        target_train: take(&splits.train, tgt),
        target_dev: take(&splits.dev, tgt),
        target_test: take(&splits.test, tgt),
        cache: load_embedder_cache(&config.embedder)?,
    };
    let dir = config.output_dir.clone();
    write_text(&dir.join("effective_config.json"), &config.to_json())?;
    let observer = |r: &srl_core::evaluator::SweepRow| {
        eprintln!("{}%\tF1 {:.2}\t({} English batches)", r.english_percentage, r.f1, r.english_batches);
    };
    let result = match config.train.precision {
        Precision::Standard => run_sweep_with_observer::<f32>(&setup, &args.fractions, observer),
        Precision::High => run_sweep_with_observer::<f64>(&setup, &args.fractions, observer),
    };
    let (table, error): (SweepTable, Option<Error>) = match result {
        Ok(t) => (t, None),
        Err(e) => (e.partial, Some(Error::Train(e.error))),
    };
    write_text(&dir.join("sweep.tsv"), &render_sweep(&table, ReportFormat::Tsv))?;
    write_text(&dir.join("sweep.json"), &render_sweep(&table, ReportFormat::Json))?;
    match error {
        Some(e) => Err(e),
        None => {
            print!("{}", render_sweep(&table, ReportFormat::Tsv));
            Ok(())
        }
    }
}

/// The small two-language model `srl gradcheck` verifies.
pub fn gradcheck_model(seed: u64) -> (SrlModel<f64>, [srl_core::corpus::Sentence; 2]) {
    let (en, fa) = three_token_pair();
    let train: BTreeMap<String, Corpus> = [&en, &fa]
        .into_iter()
        .map(|s| {
            let mut c = Corpus::new(s.language.clone());
            c.sentences.push(s.clone());
            (s.language.clone(), c)
        })
        .collect();
    let config = ModelConfig {
        d_e: 4,
        hidden: 2,
        sent_layers: 1,
        arg_layers: 1,
        d_p: 4,
        d_s: 4,
        d_r: 4,
        seed,
        ..ModelConfig::default()
    };
    let spec = EmbedderSpec::DeterministicToy { width: 2, layers: 4, seed };
    let model = build_model(config, &spec, &train, None).expect("fixture model builds");
    (model, [en, fa])
}

pub fn run_gradcheck(seed: u64, eps: f64) -> Result<GradCheckReport> {
    let (mut model, [en, fa]) = gradcheck_model(seed);
    model_grad_check(&mut model, &[&en, &fa], eps).map_err(|e| Error::Usage(format!("gradient check: {e}")))
}

fn gradcheck(args: &GradcheckArgs) -> Result<()> {
    if args.eps.is_nan() || args.eps <= 0.0 {
        return Err(Error::Usage("--eps must be positive".into()));
    }
    let report = run_gradcheck(args.seed, args.eps)?;
    println!(
        "seed {}: checked {} scalars, max relative error {:.3e}",
        args.seed, report.checked, report.max_relative_error
    );
    if report.max_relative_error < args.tolerance {
        Ok(())
    } else {
        Err(Error::GradCheck {
            error: report.max_relative_error,
            tolerance: args.tolerance,
            worst: format!("{:?}", report.worst),
        })
    }
}
