//! The `semfeat` command line: batch pipeline steps over JSON files, the
//! HTTP service, and `session` commands that drive the same persisted
//! sessions the service does.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use semfeat_core::classifier::{build_bow_spec, train, ContextModels, FeatureSpec, FeatureVector, LogRegModel, Scheme, Vectorizer};
use semfeat_core::context::{
    calibrate_threshold, fit_context_model, rank_contexts, suggest_terms, trigger_percentage, ContextModel,
    ContextTrainConfig, SamplingConfig, SuggestConfig,
};
use semfeat_core::logistic::Regularization;
use semfeat_core::{tokenize, Corpus, Dictionary, Error, Label, Record};

use crate::config::{read_corpus, Defaults, ServiceConfig, Workspace};
use crate::error::{AppError, Result};
use crate::ops;
use crate::store::Store;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "semfeat", version, about = "Dictionary and smoothed-dictionary features for teaching text classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus JSONL file and store it in a data directory.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
    },
    /// Train the context model of a dictionary.
    TrainContext {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        negative_ratio: f64,
        #[arg(long, default_value_t = 100_000)]
        max_positives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Set a dictionary's smooth-match threshold from a matches-per-document target.
    Calibrate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Smooth matches per document; defaults to the mean literal count.
        #[arg(long)]
        target: Option<f64>,
        /// Where to write the updated dictionary; defaults to overwriting it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank candidate terms for a dictionary.
    Suggest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        #[arg(long, default_value_t = 3)]
        min_occurrences: usize,
        #[arg(long, default_value_t = 1)]
        max_ngram_len: usize,
    },
    /// Turn every corpus document into a feature vector.
    Featurize {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long = "dictionary")]
        dictionaries: Vec<PathBuf>,
        #[arg(long = "context-model")]
        context_models: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        min_df: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a document classifier on featurized, labeled documents.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// JSONL with `id` and `label` fields (corpus files qualify).
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = Penalty::L2)]
        penalty: Penalty,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a classifier; prints the report as JSON.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Also write the precision/recall curve as CSV.
        #[arg(long)]
        pr_csv: Option<PathBuf>,
    },
    /// List the occurrences of a term by how dictionary-like their context is.
    RankContexts {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long, default_value_t = ops::DEFAULT_CONTEXT_LIMIT)]
        limit: usize,
        /// Threshold to report the trigger percentage for; defaults to the
        /// dictionary's.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        /// Corpus JSONL; defaults to the one ingested into the data directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Static UI assets to serve under `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1 << 20)]
        max_body_bytes: usize,
        #[arg(long, default_value_t = 64)]
        snapshot_every: u64,
        #[command(flatten)]
        defaults: DefaultsArgs,
    },
    /// Operate on persisted teaching sessions, as the service does.
    Session {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        snapshot_every: u64,
        #[command(flatten)]
        defaults: DefaultsArgs,
        #[command(subcommand)]
        op: SessionOp,
    },
}

#[derive(Debug, Args)]
struct DefaultsArgs {
    /// L2 strength for classifiers and context models.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    negative_ratio: f64,
    #[arg(long, default_value_t = semfeat_core::teach::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    calibration_target: Option<f64>,
}

impl From<DefaultsArgs> for Defaults {
    fn from(a: DefaultsArgs) -> Self {
        Defaults {
            lambda: a.lambda,
            laplace_alpha: a.alpha,
            negative_ratio: a.negative_ratio,
            epsilon: a.epsilon,
            calibration_target: a.calibration_target,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Penalty {
    L1,
    L2,
}

impl Penalty {
    fn with(self, lambda: f64) -> Regularization {
        match self {
            Penalty::L1 => Regularization::L1(lambda),
            Penalty::L2 => Regularization::L2(lambda),
        }
    }
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_label(s: &str) -> std::result::Result<Label, String> {
    match s {
        "1" | "pos" | "positive" => Ok(Label::Positive),
        "0" | "neg" | "negative" => Ok(Label::Negative),
        _ => Err(format!("label must be 0 or 1, got {s:?}")),
    }
}

#[derive(Debug, Subcommand)]
enum SessionOp {
    /// Create a session.
    Create {
        #[arg(long)]
        session: String,
        #[arg(long, default_value = "")]
        task: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start from 5 positive and 5 negative ground-truth labels.
        #[arg(long)]
        auto_seed: bool,
        #[arg(long, value_enum)]
        penalty: Option<Penalty>,
        #[arg(long)]
        min_df: Option<usize>,
    },
    /// List session ids.
    List,
    /// Print the full session state.
    Show {
        #[arg(long)]
        session: String,
    },
    Label {
        #[arg(long)]
        session: String,
        #[arg(long)]
        doc: String,
        #[arg(long, value_parser = parse_label)]
        label: Label,
    },
    /// Documents to label next.
    Next {
        #[arg(long)]
        session: String,
        #[arg(long, default_value = "uncertainty")]
        strategy: String,
        #[arg(long, default_value_t = ops::DEFAULT_COUNT)]
        count: usize,
        #[arg(long)]
        query: Option<String>,
    },
    Retrain {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long, value_enum)]
        penalty: Option<Penalty>,
    },
    /// Training documents the current model disagrees with.
    Blindness {
        #[arg(long)]
        session: String,
    },
    Status {
        #[arg(long)]
        session: String,
    },
    /// Add or replace a dictionary, from a JSON body file or phrases.
    #[command(group = clap::ArgGroup::new("source").required(true).args(["file", "phrase"]))]
    DictPut {
        #[arg(long)]
        session: String,
        #[arg(long)]
        dict: String,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        phrase: Vec<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    DictRm {
        #[arg(long)]
        session: String,
        #[arg(long)]
        dict: String,
    },
    /// Set a dictionary's threshold directly.
    Threshold {
        #[arg(long)]
        session: String,
        #[arg(long)]
        dict: String,
        #[arg(long)]
        gamma: f64,
    },
    TrainContext {
        #[arg(long)]
        session: String,
        #[arg(long)]
        dict: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_positives: Option<usize>,
    },
    Calibrate {
        #[arg(long)]
        session: String,
        #[arg(long)]
        dict: String,
        #[arg(long)]
        target: Option<f64>,
    },
    Contexts {
        #[arg(long)]
        session: String,
        #[arg(long)]
        dict: String,
        #[arg(long)]
        term: String,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    Suggestions {
        #[arg(long)]
        session: String,
        #[arg(long)]
        dict: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Evaluate a scheme trained on the session labels against the held-out
    /// ground truth.
    Metrics {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
    },
    /// Print one corpus document.
    Doc {
        #[arg(long)]
        id: String,
    },
}

/// Featurized documents, as written by `featurize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub spec: FeatureSpec,
    pub vectors: Vec<FeatureVector>,
}

#[derive(Debug, Deserialize)]
struct LabelRecord {
    id: String,
    #[serde(default)]
    label: Option<Label>,
}

#[derive(Debug, Serialize)]
struct IngestReport {
    path: PathBuf,
    documents: usize,
    tokens: usize,
    vocabulary: usize,
    positives: usize,
    negatives: usize,
}

#[derive(Debug, Serialize)]
struct RankReport {
    term: Vec<String>,
    total: usize,
    gamma: Option<f64>,
    trigger_percentage: Option<f64>,
    rows: Vec<semfeat_core::context::ContextRow>,
}

/// Runs the command line and returns the process exit code. Results go to
/// `out`; diagnostics to standard error.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| io_context(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| io_context(path, e))?;
    Ok(())
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn io_context(path: &Path, e: std::io::Error) -> AppError {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into()
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    if !path.is_file() {
        return Err(io_context(path, std::io::ErrorKind::NotFound.into()));
    }
    read_corpus(path)
}

fn read_context_model(path: &Path) -> Result<ContextModel> {
    Ok(read_json::<ContextModel>(path)?.prepare()?)
}

fn read_labels(path: &Path) -> Result<Vec<(String, Label)>> {
    let file = File::open(path).map_err(|e| io_context(path, e))?;
    let mut labels = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: LabelRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: n + 1,
            message: e.to_string(),
        })?;
        if let Some(label) = r.label {
            labels.push((r.id, label));
        }
    }
    Ok(labels)
}

/// Pairs each label with the vector of its document.
fn labeled_vectors(set: &FeatureSet, labels: &[(String, Label)]) -> Result<Vec<(FeatureVector, Label)>> {
    let by_id: std::collections::HashMap<&str, &FeatureVector> =
        set.vectors.iter().map(|v| (v.doc_id.as_str(), v)).collect();
    labels
        .iter()
        .map(|(id, l)| {
            by_id
                .get(id.as_str())
                .map(|v| ((*v).clone(), *l))
                .ok_or_else(|| Error::UnknownDocument(id.clone()).into())
        })
        .collect()
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Ingest { input, data_dir } => {
            let corpus = load_corpus(&input)?;
            let store = Store::open(&data_dir, 1)?;
            let path = store.corpus_path();
            let mut buf = Vec::new();
            for d in corpus.documents() {
                let r = Record {
                    id: d.id.clone(),
                    text: d.text.clone(),
                    label: d.label,
                };
                serde_json::to_writer(&mut buf, &r)?;
                buf.push(b'\n');
            }
            let tmp = path.with_extension("jsonl.tmp");
            fs::write(&tmp, buf)?;
            fs::rename(&tmp, &path)?;
            let positives = corpus.labeled().filter(|(_, l)| l.is_positive()).count();
            print_json(
                out,
                &IngestReport {
                    path,
                    documents: corpus.len(),
                    tokens: corpus.token_count(),
                    vocabulary: corpus.vocabulary().len(),
                    positives,
                    negatives: corpus.labeled().count() - positives,
                },
            )
        }
        Command::TrainContext {
            corpus,
            dictionary,
            out: path,
            negative_ratio,
            max_positives,
            seed,
            lambda,
            alpha,
        } => {
            let corpus = load_corpus(&corpus)?;
            let dict: Dictionary = read_json(&dictionary)?;
            let sampling = SamplingConfig {
                negative_ratio,
                max_positives,
                seed,
            };
            let config = ContextTrainConfig {
                l2_lambda: lambda,
                laplace_alpha: alpha,
            };
            let model = fit_context_model(&corpus, &dict, &sampling, &config)?;
            write_json(&path, &model)?;
            print_json(out, &model.fit)
        }
        Command::Calibrate {
            corpus,
            dictionary,
            model,
            target,
            out: dest,
        } => {
            let corpus = load_corpus(&corpus)?;
            let mut dict: Dictionary = read_json(&dictionary)?;
            let model = read_context_model(&model)?;
            let calibration = calibrate_threshold(&corpus, &model, &dict, target)?;
            dict.gamma = Some(calibration.gamma);
            write_json(dest.as_deref().unwrap_or(&dictionary), &dict)?;
            print_json(out, &calibration)
        }
        Command::Suggest {
            corpus,
            dictionary,
            model,
            top_k,
            min_occurrences,
            max_ngram_len,
        } => {
            let corpus = load_corpus(&corpus)?;
            let dict: Dictionary = read_json(&dictionary)?;
            let model = read_context_model(&model)?;
            let config = SuggestConfig {
                max_ngram_len,
                min_occurrences,
                top_k,
            };
            print_json(out, &suggest_terms(&corpus, &model, &dict, &config)?)
        }
        Command::Featurize {
            corpus,
            scheme,
            dictionaries,
            context_models,
            min_df,
            out: path,
        } => {
            let corpus = load_corpus(&corpus)?;
            let dicts = dictionaries
                .iter()
                .map(|p| read_json::<Dictionary>(p))
                .collect::<Result<Vec<_>>>()?;
            let models: ContextModels = context_models
                .iter()
                .map(|p| read_context_model(p).map(|m| (m.dictionary_id.clone(), m)))
                .collect::<Result<_>>()?;
            let spec = match scheme {
                Scheme::BowTfidf => build_bow_spec(&corpus, min_df)?,
                _ => FeatureSpec::dictionaries(scheme, dicts.iter().map(|d| d.id.clone()))?,
            };
            let vectors = Vectorizer::new(&corpus, &spec, &dicts, &models)?.vectorize_all();
            let n = vectors.len();
            write_json(&path, &FeatureSet { spec, vectors })?;
            print_json(out, &serde_json::json!({ "documents": n }))
        }
        Command::Train {
            features,
            labels,
            penalty,
            lambda,
            out: path,
        } => {
            let set: FeatureSet = read_json(&features)?;
            let examples = labeled_vectors(&set, &read_labels(&labels)?)?;
            let model = train(&set.spec, &examples, penalty.with(lambda))?;
            write_json(&path, &model)?;
            print_json(out, &model.meta)
        }
        Command::Eval {
            model,
            features,
            labels,
            pr_csv,
        } => {
            let model: LogRegModel = read_json(&model)?;
            model.check()?;
            let set: FeatureSet = read_json(&features)?;
            if set.spec != model.spec {
                return Err(Error::InvalidArgument(
                    "features were built under a different spec than the model".into(),
                )
                .into());
            }
            let report = model.evaluate(&labeled_vectors(&set, &read_labels(&labels)?)?)?;
            if let Some(p) = pr_csv {
                fs::write(&p, report.pr_csv()).map_err(|e| io_context(&p, e))?;
            }
            print_json(out, &report)
        }
        Command::RankContexts {
            corpus,
            dictionary,
            model,
            term,
            limit,
            gamma,
        } => {
            let corpus = load_corpus(&corpus)?;
            let dict: Dictionary = read_json(&dictionary)?;
            let model = read_context_model(&model)?;
            let term = tokenize(&term);
            let mut rows = rank_contexts(&corpus, &model, &term, usize::MAX)?;
            let gamma = gamma.or(dict.gamma);
            let trigger = gamma.and_then(|g| trigger_percentage(&rows, g));
            let total = rows.len();
            rows.truncate(limit);
            print_json(
                out,
                &RankReport {
                    term,
                    total,
                    gamma,
                    trigger_percentage: trigger,
                    rows,
                },
            )
        }
        Command::Serve {
            data_dir,
            corpus,
            listen,
            static_dir,
            max_body_bytes,
            snapshot_every,
            defaults,
        } => {
            let config = ServiceConfig {
                listen,
                data_dir,
                corpus,
                defaults: defaults.into(),
                max_body_bytes,
                snapshot_every,
                static_dir,
            };
            tokio::runtime::Runtime::new()?.block_on(crate::service::serve(config))
        }
        Command::Session {
            data_dir,
            corpus,
            snapshot_every,
            defaults,
            op,
        } => {
            let ws = Workspace::open(&data_dir, corpus.as_deref(), defaults.into(), snapshot_every)?;
            session(&ws, op, out)
        }
    }
}

/// Loads a session, applies `f`, persists what it logged and prints the
/// result.
fn mutate<T: Serialize>(
    ws: &Workspace,
    id: &str,
    out: &mut dyn Write,
    f: impl FnOnce(&mut semfeat_core::teach::TeachingSession) -> Result<T>,
) -> Result<()> {
    let mut s = ws.store.load(&ws.corpus, id)?;
    let from = s.next_seq();
    let value = f(&mut s)?;
    ws.store.persist(&s, from)?;
    print_json(out, &value)
}

fn inspect<T: Serialize>(
    ws: &Workspace,
    id: &str,
    out: &mut dyn Write,
    f: impl FnOnce(&semfeat_core::teach::TeachingSession) -> Result<T>,
) -> Result<()> {
    let s = ws.store.load(&ws.corpus, id)?;
    print_json(out, &f(&s)?)
}

fn session(ws: &Workspace, op: SessionOp, out: &mut dyn Write) -> Result<()> {
    let c = &ws.corpus;
    match op {
        SessionOp::Create {
            session,
            task,
            seed,
            auto_seed,
            penalty,
            min_df,
        } => {
            let req = ops::CreateSessionRequest {
                id: session,
                task,
                epsilon: None,
                seed,
                auto_seed,
                regularization: penalty.map(|p| p.with(ws.defaults.lambda)),
                bow_min_df: min_df,
            };
            let s = ops::create(c, &ws.defaults, req)?;
            ws.store.create(&s)?;
            print_json(out, &s)
        }
        SessionOp::List => print_json(out, &ws.store.session_ids()?),
        SessionOp::Show { session } => inspect(ws, &session, out, |s| Ok(s.clone())),
        SessionOp::Label { session, doc, label } => mutate(ws, &session, out, |s| {
            ops::label(s, c, ops::LabelRequest { doc_id: doc, label })
        }),
        SessionOp::Next {
            session,
            strategy,
            count,
            query,
        } => inspect(ws, &session, out, |s| {
            ops::next(
                s,
                c,
                ops::NextQuery {
                    strategy: Some(strategy),
                    count: Some(count),
                    query,
                },
            )
        }),
        SessionOp::Retrain {
            session,
            scheme,
            penalty,
        } => mutate(ws, &session, out, |s| {
            let regularization = penalty.map(|p| p.with(ws.defaults.lambda));
            ops::retrain(s, c, ops::RetrainRequest { scheme, regularization })
        }),
        SessionOp::Blindness { session } => inspect(ws, &session, out, |s| ops::blindness(s, c)),
        SessionOp::Status { session } => inspect(ws, &session, out, |s| ops::status(s, c)),
        SessionOp::DictPut {
            session,
            dict,
            file,
            phrase,
            name,
            gamma,
        } => {
            let mut body = match file {
                Some(p) => read_json::<ops::DictionaryBody>(&p)?,
                None => ops::DictionaryBody {
                    phrases: Some(phrase),
                    ..Default::default()
                },
            };
            body.name = name.or(body.name);
            body.gamma = gamma.or(body.gamma);
            let d = body.into_dictionary(&dict)?;
            mutate(ws, &session, out, |s| ops::put_dictionary(s, c, d))
        }
        SessionOp::DictRm { session, dict } => {
            mutate(ws, &session, out, |s| ops::delete_dictionary(s, c, &dict))
        }
        SessionOp::Threshold { session, dict, gamma } => mutate(ws, &session, out, |s| {
            ops::set_threshold(s, c, &dict, ops::ThresholdRequest { gamma })
        }),
        SessionOp::TrainContext {
            session,
            dict,
            seed,
            max_positives,
        } => mutate(ws, &session, out, |s| {
            let req = ops::TrainContextRequest {
                seed,
                max_positives,
                ..Default::default()
            };
            ops::train_context(s, c, &ws.defaults, &dict, req)
        }),
        SessionOp::Calibrate { session, dict, target } => mutate(ws, &session, out, |s| {
            ops::calibrate(s, c, &ws.defaults, &dict, ops::CalibrateRequest { target })
        }),
        SessionOp::Contexts {
            session,
            dict,
            term,
            limit,
            gamma,
        } => inspect(ws, &session, out, |s| {
            ops::contexts(s, c, &dict, ops::ContextsQuery { term, limit, gamma })
        }),
        SessionOp::Suggestions { session, dict, k } => inspect(ws, &session, out, |s| {
            ops::suggestions(
                s,
                c,
                &dict,
                ops::SuggestionsQuery {
                    k,
                    ..Default::default()
                },
            )
        }),
        SessionOp::Metrics { session, scheme } => {
            inspect(ws, &session, out, |s| ops::metrics(s, c, ops::MetricsQuery { scheme }))
        }
        SessionOp::Doc { id } => print_json(out, &ops::doc(c, &id)?),
    }
}
