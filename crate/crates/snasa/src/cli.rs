//! The `snasa` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use snasa_core::baseline::{average_sentence_vector, predict_logreg, train_logreg};
use snasa_core::classifier::{build_reference_set, classify, evaluate};
use snasa_core::corpus::{apply_emoji_map, class_distribution, EmojiOptions};
use snasa_core::featurizer::{build_joint_vocabulary, vocabulary_stats};
use snasa_core::trainer::{generate_pairs, train, Margin};
use snasa_core::{Dataset, EvalReport, Model, ReferenceSet};

use crate::config::RunConfig;
use crate::formats;
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "snasa", version, about = "Cross-lingual sentiment encoder with a shared Siamese Bi-LSTM")]
struct Cli {
    /// Run configuration file (`key = value` lines); flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for initialization, pair sampling and reference sampling [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Classification policy: meansim, knn:<k> or threshold[:<t>] [default: meansim]
    #[arg(long, global = true, value_name = "POLICY")]
    policy: Option<String>,

    /// Contrastive margin in (0, 1); also the bare `threshold` cut-off [default: 0.5]
    #[arg(long, global = true)]
    margin: Option<f64>,

    /// Reference sentences sampled per class [default: 100]
    #[arg(long, global = true, value_name = "N")]
    refs_per_class: Option<usize>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Label scheme of the datasets: three-class or four-class [default: three-class]
    #[arg(long)]
    scheme: Option<String>,

    /// Lowercase text before extracting trigrams [default: true]
    #[arg(long, value_name = "BOOL")]
    lowercase: Option<bool>,

    /// Drop trigrams seen fewer times than this [default: 1]
    #[arg(long, value_name = "N")]
    min_count: Option<usize>,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// Dissimilar pairs per similar pair [default: 1]
    #[arg(long, value_name = "N")]
    negatives_per_positive: Option<usize>,

    /// Similar rich-language partners per poor-language sentence [default: 4]
    #[arg(long, value_name = "N")]
    positives_per_sentence: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Resource-poor training set (TSV id/label/text)
    #[arg(long, value_name = "FILE")]
    poor: Option<PathBuf>,

    /// Resource-rich training set, also the reference pool (TSV id/label/text)
    #[arg(long, value_name = "FILE")]
    rich: Option<PathBuf>,

    /// Held-out poor-language set; enables per-epoch accuracy and eval.csv
    #[arg(long, value_name = "FILE")]
    test: Option<PathBuf>,

    /// Fixed pair list reused every epoch instead of fresh samples
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,

    /// Existing vocabulary; by default one is built over both training sets
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,

    /// Training epochs [default: 30]
    #[arg(long)]
    epochs: Option<usize>,

    /// Learning rate [default: 0.05]
    #[arg(long, value_name = "RATE")]
    learning_rate: Option<f64>,

    /// Pairs per batch [default: 32]
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,

    /// Global gradient-norm clip, or `none` [default: 5]
    #[arg(long, value_name = "NORM")]
    clip_norm: Option<String>,

    /// sgd or momentum [default: sgd]
    #[arg(long)]
    optimizer: Option<String>,

    /// Trigram embedding size [default: 64]
    #[arg(long, value_name = "N")]
    embed_dim: Option<usize>,

    /// LSTM hidden size per direction [default: 64]
    #[arg(long, value_name = "N")]
    hidden_dim: Option<usize>,

    /// Sentiment space dimension [default: 128]
    #[arg(long, value_name = "N")]
    output_dim: Option<usize>,

    #[command(flatten)]
    pairing: PairArgs,

    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a trigram vocabulary over one or more datasets; writes vocab.txt
    BuildVocab {
        /// Dataset files (TSV id/label/text), visited in order
        #[arg(long = "input", value_name = "FILE", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,

        #[command(flatten)]
        corpus: CorpusArgs,
    },

    /// Label raw tweets by their emojis; writes labeled.tsv and prints the counts
    EmojiMap {
        /// Raw sentences (TSV id/text)
        #[arg(long, value_name = "FILE")]
        input: PathBuf,

        /// Emoji to class map (TSV emoji/label)
        #[arg(long, value_name = "FILE")]
        map: PathBuf,

        /// Remove the mapped emojis from the kept text [default: false]
        #[arg(long)]
        strip_emojis: bool,

        /// Language tag for the output [default: the input file stem]
        #[arg(long)]
        language: Option<String>,
    },

    /// Sample poor/rich training pairs; writes pairs.tsv
    MakePairs {
        /// Resource-poor training set (TSV id/label/text)
        #[arg(long, value_name = "FILE")]
        poor: Option<PathBuf>,

        /// Resource-rich training set (TSV id/label/text)
        #[arg(long, value_name = "FILE")]
        rich: Option<PathBuf>,

        #[command(flatten)]
        pairing: PairArgs,

        /// Label scheme of the datasets [default: three-class]
        #[arg(long)]
        scheme: Option<String>,
    },

    /// Train the encoder; writes model.bin, epochs.csv, config.echo and, with --test, eval.csv
    #[command(args_override_self = true)]
    Train(TrainArgs),

    /// Sample and embed per-class references from the rich language; writes refs.tsv
    BuildRefs {
        /// Trained model (model.bin)
        #[arg(long, value_name = "FILE")]
        model: PathBuf,

        /// Rich-language dataset (TSV id/label/text)
        #[arg(long, value_name = "FILE")]
        rich: PathBuf,

        /// Label scheme of the dataset [default: three-class]
        #[arg(long)]
        scheme: Option<String>,
    },

    /// Classify one sentence or a file of `id<TAB>text` lines; prints labels
    Classify {
        /// Trained model (model.bin)
        #[arg(long, value_name = "FILE")]
        model: PathBuf,

        /// References built for the same model (refs.tsv)
        #[arg(long, value_name = "FILE")]
        refs: PathBuf,

        /// A single sentence; prints exactly one label
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        text: Option<String>,

        /// Sentences as `id<TAB>text`; prints `id<TAB>label` lines
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },

    /// Evaluate on a labeled test set; writes eval.csv
    Evaluate {
        /// Trained model (model.bin)
        #[arg(long, value_name = "FILE")]
        model: PathBuf,

        /// References built for the same model (refs.tsv)
        #[arg(long, value_name = "FILE")]
        refs: PathBuf,

        /// Labeled test set (TSV id/label/text)
        #[arg(long, value_name = "FILE")]
        test: PathBuf,

        /// Label scheme of the test set [default: three-class]
        #[arg(long)]
        scheme: Option<String>,
    },

    /// Averaged word vectors with logistic regression; writes eval.csv
    BaselineAsv {
        /// Labeled training set
        #[arg(long, value_name = "FILE")]
        train: PathBuf,

        /// Labeled test set
        #[arg(long, value_name = "FILE")]
        test: PathBuf,

        /// Word vectors, one `word v1 ... vk` per line
        #[arg(long, value_name = "FILE")]
        vectors: PathBuf,

        /// L2 strength on the weights [default: 0.001]
        #[arg(long)]
        lambda: Option<f64>,

        /// Gradient infinity-norm stopping tolerance [default: 0.001]
        #[arg(long)]
        tol: Option<f64>,

        /// Iteration cap [default: 5000]
        #[arg(long, value_name = "N")]
        max_iters: Option<usize>,

        /// Label scheme of both sets [default: three-class]
        #[arg(long)]
        scheme: Option<String>,
    },

    /// Corpus statistics: sentences, class counts, unique words and trigrams
    Stats {
        /// Dataset files (TSV id/label/text)
        #[arg(long = "input", value_name = "FILE", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,

        #[command(flatten)]
        corpus: CorpusArgs,
    },
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<snasa_core::Error> for Failure {
    fn from(e: snasa_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .try_init();
    match with_threads(cli.threads, || execute(&cli)) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            log::warn!("could not start a thread pool ({e}); using the global one");
            f()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R>(_threads: usize, f: impl FnOnce() -> R) -> R {
    f()
}

/// `(key, value)` overrides from the flags, applied after the config file.
fn overrides(cli: &Cli) -> Vec<(&'static str, String)> {
    let mut v: Vec<(&'static str, Option<String>)> = vec![
        ("seed", cli.seed.map(|s| s.to_string())),
        ("margin", cli.margin.map(|m| m.to_string())),
        ("refs_per_class", cli.refs_per_class.map(|n| n.to_string())),
        ("policy", cli.policy.clone()),
    ];
    let corpus = |v: &mut Vec<(&'static str, Option<String>)>, c: &CorpusArgs| {
        v.push(("scheme", c.scheme.clone()));
        v.push(("lowercase", c.lowercase.map(|b| b.to_string())));
        v.push(("min_count", c.min_count.map(|n| n.to_string())));
    };
    let pairing = |v: &mut Vec<(&'static str, Option<String>)>, p: &PairArgs| {
        v.push(("negatives_per_positive", p.negatives_per_positive.map(|n| n.to_string())));
        v.push(("positives_per_sentence", p.positives_per_sentence.map(|n| n.to_string())));
    };
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    match &cli.command {
        Command::BuildVocab { corpus: c, .. } | Command::Stats { corpus: c, .. } => corpus(&mut v, c),
        Command::EmojiMap { strip_emojis, .. } => {
            v.push(("strip_emojis", strip_emojis.then(|| "true".to_string())))
        }
        Command::MakePairs { poor, rich, pairing: p, scheme } => {
            v.push(("poor", path(poor)));
            v.push(("rich", path(rich)));
            v.push(("scheme", scheme.clone()));
            pairing(&mut v, p);
        }
        Command::Train(t) => {
            v.push(("poor", path(&t.poor)));
            v.push(("rich", path(&t.rich)));
            v.push(("test", path(&t.test)));
            v.push(("pairs", path(&t.pairs)));
            v.push(("epochs", t.epochs.map(|n| n.to_string())));
            v.push(("learning_rate", t.learning_rate.map(|x| x.to_string())));
            v.push(("batch_size", t.batch_size.map(|n| n.to_string())));
            v.push(("clip_norm", t.clip_norm.clone()));
            v.push(("optimizer", t.optimizer.clone()));
            v.push(("embed_dim", t.embed_dim.map(|n| n.to_string())));
            v.push(("hidden_dim", t.hidden_dim.map(|n| n.to_string())));
            v.push(("output_dim", t.output_dim.map(|n| n.to_string())));
            pairing(&mut v, &t.pairing);
            corpus(&mut v, &t.corpus);
        }
        Command::BuildRefs { scheme, .. } | Command::Evaluate { scheme, .. } => {
            v.push(("scheme", scheme.clone()))
        }
        Command::Classify { .. } => {}
        Command::BaselineAsv { lambda, tol, max_iters, scheme, .. } => {
            v.push(("lambda", lambda.map(|x| x.to_string())));
            v.push(("tol", tol.map(|x| x.to_string())));
            v.push(("max_iters", max_iters.map(|n| n.to_string())));
            v.push(("scheme", scheme.clone()));
        }
    }
    v.into_iter().filter_map(|(k, x)| x.map(|x| (k, x))).collect()
}

fn resolve_config(cli: &Cli) -> Outcome<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(file) = &cli.config {
        cfg.apply_file(file)?;
    }
    for (key, value) in overrides(cli) {
        let flag = key.replace('_', "-");
        cfg.set(key, &value)
            .map_err(|m| Failure::Usage(format!("--{flag}: {m}")))?;
    }
    if !(cfg.train.margin > 0.0 && cfg.train.margin < 1.0) {
        return Err(Failure::Usage(format!("margin {} must lie in (0, 1)", cfg.train.margin)));
    }
    Ok(cfg)
}

fn out_file(cli: &Cli, name: &str) -> Outcome<PathBuf> {
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    Ok(cli.out.join(name))
}

fn echo_config(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let path = out_file(cli, "config.echo")?;
    formats::write_bytes(&path, cfg.echo().as_bytes())?;
    Ok(())
}

fn required(p: &Option<PathBuf>, what: &str) -> Outcome<PathBuf> {
    p.clone()
        .ok_or_else(|| Failure::Usage(format!("--{what} is required (flag or config key '{what}')")))
}

fn load(path: &Path, cfg: &RunConfig) -> Outcome<Dataset> {
    Ok(formats::load_dataset(path, cfg.scheme, None)?)
}

/// Loads a model and a reference set and checks they belong together.
fn load_model_and_refs(model: &Path, refs: &Path) -> Outcome<(Model, ReferenceSet)> {
    let m = formats::load_model(model)?;
    let r = formats::load_references(refs)?;
    if r.model_fingerprint() != m.params.fingerprint() {
        return Err(Error::format(
            refs,
            format!(
                "references were built with model {:08x}, but {} is model {:08x}",
                r.model_fingerprint(),
                model.display(),
                m.params.fingerprint()
            ),
        )
        .into());
    }
    if r.dim() != m.params.dims().output_dim {
        return Err(Error::format(refs, "reference dimension differs from the model's output").into());
    }
    Ok((m, r))
}

fn execute(cli: &Cli) -> Outcome {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::BuildVocab { inputs, .. } => {
            let sets = inputs.iter().map(|p| load(p, &cfg)).collect::<Outcome<Vec<_>>>()?;
            let refs: Vec<&Dataset> = sets.iter().collect();
            let vocab = build_joint_vocabulary(&refs, cfg.vocab)?;
            formats::save_vocabulary(&vocab, &out_file(cli, "vocab.txt")?)?;
            echo_config(cli, &cfg)?;
            println!("trigrams\t{}", vocab.len());
        }
        Command::EmojiMap { input, map, language, .. } => {
            let map = formats::load_emoji_map(map)?;
            let raw = formats::load_raw_texts(input)?;
            let name = formats::stem(input);
            let lang = language.clone().unwrap_or_else(|| name.clone());
            let options = EmojiOptions { strip_emojis: cfg.strip_emojis };
            let (labeled, report) = apply_emoji_map(name, &lang, raw, &map, options)?;
            formats::save_dataset(&labeled, &out_file(cli, "labeled.tsv")?)?;
            echo_config(cli, &cfg)?;
            println!("kept\t{}", report.kept);
            println!("dropped_unmapped\t{}", report.dropped_unmapped);
            println!("dropped_conflicting\t{}", report.dropped_conflicting);
            println!("dropped_empty\t{}", report.dropped_empty);
            if !labeled.is_empty() {
                let dist = class_distribution(&labeled)?;
                for (label, fraction) in dist.fractions() {
                    println!("{label}\t{}\t{fraction}", dist.count(label));
                }
            }
        }
        Command::MakePairs { .. } => {
            let poor = load(&required(&cfg.poor, "poor")?, &cfg)?;
            let rich = load(&required(&cfg.rich, "rich")?, &cfg)?;
            let t = &cfg.train;
            let pairs = generate_pairs(
                &poor,
                &rich,
                t.negatives_per_positive,
                t.positives_per_sentence,
                t.pair_seed(1),
            )?;
            formats::save_pairs(&pairs, &poor, &rich, &out_file(cli, "pairs.tsv")?)?;
            echo_config(cli, &cfg)?;
            println!("pairs\t{}", pairs.len());
        }
        Command::Train(args) => run_train(cli, &cfg, args)?,
        Command::BuildRefs { model, rich, .. } => {
            let model = formats::load_model(model)?;
            let rich = load(rich, &cfg)?;
            let refs = build_reference_set(&model, &rich, cfg.refs_per_class, cfg.train.seed)?;
            formats::save_references(&refs, &out_file(cli, "refs.tsv")?)?;
            echo_config(cli, &cfg)?;
        }
        Command::Classify { model, refs, text, input } => {
            let (model, refs) = load_model_and_refs(model, refs)?;
            let policy = cfg.policy()?;
            if let Some(text) = text {
                let label = classify(&model.embed(text)?, &refs, policy)?;
                println!("{label}");
            } else if let Some(input) = input {
                let mut out = String::new();
                for (id, text) in formats::load_raw_texts(input)? {
                    let label = classify(&model.embed(&text)?, &refs, policy)?;
                    out.push_str(&format!("{id}\t{label}\n"));
                }
                print!("{out}");
            }
        }
        Command::Evaluate { model, refs, test, .. } => {
            let (model, refs) = load_model_and_refs(model, refs)?;
            let test = load(test, &cfg)?;
            let report = evaluate(&model, &refs, &test, cfg.policy()?)?.with_meta("scheme", test.scheme().name());
            finish_report(cli, &cfg, &report)?;
        }
        Command::BaselineAsv { train: train_path, test, vectors, .. } => {
            let table = formats::load_word_vectors(vectors)?;
            let train_set = load(train_path, &cfg)?;
            let test_set = load(test, &cfg)?;
            let features: Vec<(Vec<f64>, _)> = train_set
                .sentences()
                .iter()
                .map(|s| (average_sentence_vector(&s.text, &table), s.label))
                .collect();
            let (model, trace) = train_logreg(&features, cfg.scheme, cfg.logreg)?;
            if !trace.converged {
                log::warn!("logistic regression stopped after {} iterations without converging", trace.iterations);
            }
            let outcomes = test_set
                .sentences()
                .iter()
                .map(|s| Ok((s.label, predict_logreg(&model, &average_sentence_vector(&s.text, &table))?)))
                .collect::<snasa_core::Result<Vec<_>>>()?;
            let report = EvalReport::from_predictions(cfg.scheme, outcomes)?
                .with_meta("method", "asv")
                .with_meta("lambda", cfg.logreg.lambda)
                .with_meta("tol", cfg.logreg.tol)
                .with_meta("iterations", trace.iterations)
                .with_meta("converged", trace.converged)
                .with_meta("averaging", "macro");
            finish_report(cli, &cfg, &report)?;
        }
        Command::Stats { inputs, .. } => {
            let mut header = String::from("dataset\tsentences");
            for l in cfg.scheme.classes() {
                header.push_str(&format!("\t{l}"));
            }
            header.push_str("\tunique_words\tunique_trigrams");
            let mut out = header + "\n";
            for p in inputs {
                let d = load(p, &cfg)?;
                let stats = vocabulary_stats(&d, cfg.vocab.lowercase)?;
                out.push_str(&format!("{}\t{}", d.name(), d.len()));
                for c in d.class_counts() {
                    out.push_str(&format!("\t{c}"));
                }
                out.push_str(&format!("\t{}\t{}\n", stats.unique_words, stats.unique_trigrams));
            }
            print!("{out}");
        }
    }
    Ok(())
}

fn finish_report(cli: &Cli, cfg: &RunConfig, report: &EvalReport) -> Outcome {
    formats::save_report(report, &out_file(cli, "eval.csv")?)?;
    echo_config(cli, cfg)?;
    println!("accuracy\t{}", report.accuracy);
    println!(
        "macro\t{}\t{}\t{}",
        report.macro_precision, report.macro_recall, report.macro_f1
    );
    Ok(())
}

fn run_train(cli: &Cli, cfg: &RunConfig, args: &TrainArgs) -> Outcome {
    let poor = load(&required(&cfg.poor, "poor")?, cfg)?;
    let rich = load(&required(&cfg.rich, "rich")?, cfg)?;
    let test = cfg.test.as_deref().map(|p| load(p, cfg)).transpose()?;
    let vocab = match &args.vocab {
        Some(p) => formats::load_vocabulary(p)?,
        None => build_joint_vocabulary(&[&poor, &rich], cfg.vocab)?,
    };
    let pairs = cfg
        .pairs
        .as_deref()
        .map(|p| formats::load_pairs(p, &poor, &rich))
        .transpose()?;
    let policy = cfg.policy()?;
    Margin::new(cfg.train.margin)?;
    let (n, seed) = (cfg.refs_per_class, cfg.train.seed);
    let pool = &rich;
    let hook = test.as_ref().map(|t| {
        move |_: usize, m: &Model| -> snasa_core::Result<f64> {
            let refs = build_reference_set(m, pool, n, seed)?;
            Ok(evaluate(m, &refs, t, policy)?.accuracy)
        }
    });
    let (model, log) = train(&poor, &rich, &cfg.train, &vocab, pairs.as_deref(), hook)?;
    formats::save_model(&model, &out_file(cli, "model.bin")?)?;
    formats::save_epoch_log(&log, &out_file(cli, "epochs.csv")?)?;
    if let Some(t) = &test {
        let refs = build_reference_set(&model, &rich, n, seed)?;
        let report = evaluate(&model, &refs, t, policy)?.with_meta("scheme", t.scheme().name());
        finish_report(cli, cfg, &report)?;
    } else {
        echo_config(cli, cfg)?;
    }
    if let Some(last) = log.last() {
        println!("final_mean_loss\t{}", last.mean_loss);
    }
    Ok(())
}
