//! The interactive teaching loop: labels, dictionaries and models of one
//! classification task, driven by an append-only event log.
//!
//! Every mutation goes through [`TeachingSession::apply`], which validates
//! the event against the current state, mutates, and appends it to the log.
//! Replaying a log from [`TeachingSession::default`] therefore rebuilds the
//! same state, models included (training is deterministic).

mod sampling;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    build_bow_spec, train, ContextModels, EvalReport, FeatureSpec, LabelDocs, LogRegModel,
    Scheme, Vectorizer,
};
use crate::context::{
    calibrate_threshold, fit_context_model, Calibration, ContextModel, ContextTrainConfig, SamplingConfig,
};
use crate::corpus::{Corpus, Label};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::logistic::Regularization;

pub use sampling::{rank_disagreement, rank_uncertainty, Strategy};

pub const SESSION_VERSION: &str = "session/1";
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const SEED_PER_CLASS: usize = 5;

/// Knobs fixed when a session is created.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub regularization: Regularization,
    pub bow_min_df: usize,
}

impl Default for SessionSettings {
    fn default() -> Self {
        SessionSettings {
            regularization: Regularization::default(),
            bow_min_df: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateOptions {
    pub id: String,
    pub task: String,
    pub epsilon: f64,
    pub seed: u64,
    /// Draw a balanced 5 + 5 seed set from the corpus' ground-truth labels.
    pub auto_seed: bool,
    pub settings: SessionSettings,
}

impl CreateOptions {
    pub fn new(id: impl Into<String>, task: impl Into<String>) -> Self {
        CreateOptions {
            id: id.into(),
            task: task.into(),
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            auto_seed: false,
            settings: SessionSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Created {
        id: String,
        task: String,
        epsilon: f64,
        seed: u64,
        settings: SessionSettings,
    },
    Label {
        doc_id: String,
        label: Label,
    },
    UpsertDictionary {
        dictionary: Dictionary,
    },
    RemoveDictionary {
        dictionary_id: String,
    },
    TrainContext {
        dictionary_id: String,
        sampling: SamplingConfig,
        config: ContextTrainConfig,
    },
    Calibrate {
        dictionary_id: String,
        target: Option<f64>,
    },
    SetThreshold {
        dictionary_id: String,
        gamma: f64,
    },
    Retrain {
        scheme: Scheme,
        regularization: Regularization,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at_ms: u64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub label: Label,
    pub at_ms: u64,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub scheme: Scheme,
    pub model: LogRegModel,
    /// Set when labels or features changed after training.
    pub stale: bool,
    pub trained_at_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub doc_id: String,
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindnessReport {
    pub disagreements: Vec<Disagreement>,
    pub training_size: usize,
    pub training_error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopStatus {
    pub converged: bool,
    pub training_error_rate: f64,
    pub epsilon: f64,
    pub stale: bool,
}

/// Result of an off-lock retrain, published later with
/// [`TeachingSession::commit_retrain`].
#[derive(Debug, Clone)]
pub struct Retrained {
    based_on_seq: u64,
    scheme: Scheme,
    regularization: Regularization,
    current: LogRegModel,
    baseline: Option<LogRegModel>,
}

impl Retrained {
    /// Sequence number the session must still be at for the commit to land.
    pub fn based_on_seq(&self) -> u64 {
        self.based_on_seq
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TeachingSession {
    pub version: String,
    pub id: String,
    pub task: String,
    pub epsilon: f64,
    pub seed: u64,
    pub settings: SessionSettings,
    pub labels: BTreeMap<String, LabelEntry>,
    pub dictionaries: Vec<Dictionary>,
    pub context_models: ContextModels,
    /// Dictionaries whose terms changed after their context model was trained.
    pub stale_contexts: BTreeSet<String>,
    /// Outcome of the last calibration, while its threshold is in force.
    pub calibrations: BTreeMap<String, Calibration>,
    pub current: Option<TrainedModel>,
    pub baseline: Option<TrainedModel>,
    pub events: Vec<Event>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon {epsilon} is outside (0, 1]")))
    }
}

fn check_regularization(reg: Regularization) -> Result<()> {
    let l = reg.lambda();
    if l.is_finite() && l >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("lambda must be finite and nonnegative".into()))
    }
}

/// Creates a session, optionally seeded with 5 positive and 5 negative
/// ground-truth labels drawn deterministically from `options.seed`.
pub fn create_session(corpus: &Corpus, options: CreateOptions) -> Result<TeachingSession> {
    let seed_labels = if options.auto_seed {
        draw_seed_set(corpus, options.seed)?
    } else {
        Vec::new()
    };
    let mut session = TeachingSession::default();
    session.record(
        corpus,
        Action::Created {
            id: options.id,
            task: options.task,
            epsilon: options.epsilon,
            seed: options.seed,
            settings: options.settings,
        },
    )?;
    for (doc_id, label) in seed_labels {
        session.record(corpus, Action::Label { doc_id, label })?;
    }
    Ok(session)
}

/// Balanced seed set: `SEED_PER_CLASS` ground-truth positives, then as many
/// negatives, each sampled without replacement in corpus order.
pub fn draw_seed_set(corpus: &Corpus, seed: u64) -> Result<Vec<(String, Label)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * SEED_PER_CLASS);
    for label in [Label::Positive, Label::Negative] {
        let pool: Vec<&str> = corpus
            .documents()
            .iter()
            .filter(|d| d.label == Some(label))
            .map(|d| d.id.as_str())
            .collect();
        if pool.len() < SEED_PER_CLASS {
            return Err(Error::Precondition(format!(
                "auto-seeding needs {SEED_PER_CLASS} ground-truth {} documents, found {}",
                if label.is_positive() { "positive" } else { "negative" },
                pool.len()
            )));
        }
        for i in index::sample(&mut rng, pool.len(), SEED_PER_CLASS) {
            out.push((pool[i].to_string(), label));
        }
    }
    Ok(out)
}

impl TeachingSession {
    /// Rebuilds a session from its event log.
    pub fn replay(corpus: &Corpus, events: impl IntoIterator<Item = Event>) -> Result<Self> {
        let mut session = TeachingSession::default();
        for e in events {
            session.apply(corpus, e)?;
        }
        if session.events.is_empty() {
            return Err(Error::InvalidArgument("empty event log".into()));
        }
        Ok(session)
    }

    /// Parses a snapshot and restores the model lookup tables.
    pub fn from_snapshot(json: &str) -> Result<Self> {
        let mut session: TeachingSession = serde_json::from_str(json)?;
        if session.version != SESSION_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported session version {:?}",
                session.version
            )));
        }
        session.context_models = std::mem::take(&mut session.context_models)
            .into_iter()
            .map(|(k, m)| Ok((k, m.prepare()?)))
            .collect::<Result<_>>()?;
        Ok(session)
    }

    pub fn snapshot(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn training_size(&self) -> usize {
        self.labels.len()
    }

    pub fn label_of(&self, doc_id: &str) -> Option<Label> {
        self.labels.get(doc_id).map(|e| e.label)
    }

    pub fn dictionary(&self, id: &str) -> Result<&Dictionary> {
        self.dictionaries
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| Error::UnknownDictionary(id.to_string()))
    }

    /// The trained context model of a dictionary.
    pub fn context_model(&self, dictionary_id: &str) -> Result<&ContextModel> {
        self.dictionary(dictionary_id)?;
        self.context_models.get(dictionary_id).ok_or_else(|| {
            Error::MissingModel(format!("dictionary {dictionary_id:?} has no context model"))
        })
    }

    pub fn add_label(&mut self, corpus: &Corpus, doc_id: &str, label: Label) -> Result<&Event> {
        self.record(
            corpus,
            Action::Label {
                doc_id: doc_id.to_string(),
                label,
            },
        )
    }

    pub fn upsert_dictionary(&mut self, corpus: &Corpus, dictionary: Dictionary) -> Result<&Event> {
        self.record(corpus, Action::UpsertDictionary { dictionary })
    }

    pub fn remove_dictionary(&mut self, corpus: &Corpus, dictionary_id: &str) -> Result<&Event> {
        self.record(
            corpus,
            Action::RemoveDictionary {
                dictionary_id: dictionary_id.to_string(),
            },
        )
    }

    pub fn train_context(
        &mut self,
        corpus: &Corpus,
        dictionary_id: &str,
        sampling: SamplingConfig,
        config: ContextTrainConfig,
    ) -> Result<&Event> {
        self.record(
            corpus,
            Action::TrainContext {
                dictionary_id: dictionary_id.to_string(),
                sampling,
                config,
            },
        )
    }

    pub fn calibrate(&mut self, corpus: &Corpus, dictionary_id: &str, target: Option<f64>) -> Result<&Event> {
        self.record(
            corpus,
            Action::Calibrate {
                dictionary_id: dictionary_id.to_string(),
                target,
            },
        )
    }

    /// Teacher-chosen threshold, e.g. from the context explorer slider.
    pub fn set_threshold(&mut self, corpus: &Corpus, dictionary_id: &str, gamma: f64) -> Result<&Event> {
        self.record(
            corpus,
            Action::SetThreshold {
                dictionary_id: dictionary_id.to_string(),
                gamma,
            },
        )
    }

    /// Retrains the current model under `scheme` with the session's
    /// regularization.
    pub fn retrain(&mut self, corpus: &Corpus, scheme: Scheme) -> Result<&Event> {
        let regularization = self.settings.regularization;
        self.retrain_with(corpus, scheme, regularization)
    }

    pub fn retrain_with(
        &mut self,
        corpus: &Corpus,
        scheme: Scheme,
        regularization: Regularization,
    ) -> Result<&Event> {
        self.record(
            corpus,
            Action::Retrain {
                scheme,
                regularization,
            },
        )
    }

    fn record(&mut self, corpus: &Corpus, action: Action) -> Result<&Event> {
        let event = Event {
            seq: self.next_seq(),
            at_ms: now_ms(),
            action,
        };
        self.apply(corpus, event)?;
        Ok(self.events.last().expect("just appended"))
    }

    /// Validates and applies one event. On error the session is unchanged.
    pub fn apply(&mut self, corpus: &Corpus, event: Event) -> Result<()> {
        if event.seq != self.next_seq() {
            return Err(Error::InvalidArgument(format!(
                "event seq {} does not follow {}",
                event.seq,
                self.events.len()
            )));
        }
        let created = !self.events.is_empty();
        if created == matches!(event.action, Action::Created { .. }) {
            return Err(Error::InvalidArgument(if created {
                "session already created".into()
            } else {
                "event log must start with a creation event".into()
            }));
        }
        match &event.action {
            Action::Created {
                id,
                task,
                epsilon,
                seed,
                settings,
            } => {
                check_epsilon(*epsilon)?;
                check_regularization(settings.regularization)?;
                if id.is_empty() {
                    return Err(Error::InvalidArgument("session id must be nonempty".into()));
                }
                *self = TeachingSession {
                    version: SESSION_VERSION.into(),
                    id: id.clone(),
                    task: task.clone(),
                    epsilon: *epsilon,
                    seed: *seed,
                    settings: settings.clone(),
                    ..TeachingSession::default()
                };
            }
            Action::Label { doc_id, label } => {
                corpus.document(doc_id)?;
                self.labels.insert(
                    doc_id.clone(),
                    LabelEntry {
                        label: *label,
                        at_ms: event.at_ms,
                        seq: event.seq,
                    },
                );
                self.mark_models_stale(true);
            }
            Action::UpsertDictionary { dictionary } => {
                dictionary.ensure_valid()?;
                match self.dictionaries.iter_mut().find(|d| d.id == dictionary.id) {
                    Some(old) => {
                        if old.terms != dictionary.terms && self.context_models.contains_key(&old.id) {
                            self.stale_contexts.insert(old.id.clone());
                        }
                        if old.terms != dictionary.terms || old.gamma != dictionary.gamma {
                            self.calibrations.remove(&old.id);
                        }
                        *old = dictionary.clone();
                    }
                    None => self.dictionaries.push(dictionary.clone()),
                }
                self.mark_models_stale(false);
            }
            Action::RemoveDictionary { dictionary_id } => {
                self.dictionary(dictionary_id)?;
                self.dictionaries.retain(|d| &d.id != dictionary_id);
                self.context_models.remove(dictionary_id);
                self.stale_contexts.remove(dictionary_id);
                self.calibrations.remove(dictionary_id);
                self.mark_models_stale(false);
            }
            Action::TrainContext {
                dictionary_id,
                sampling,
                config,
            } => {
                let model = fit_context_model(corpus, self.dictionary(dictionary_id)?, sampling, config)?;
                self.context_models.insert(dictionary_id.clone(), model);
                self.stale_contexts.remove(dictionary_id);
                // The old threshold belonged to the old model.
                self.dictionary_mut(dictionary_id)?.gamma = None;
                self.calibrations.remove(dictionary_id);
                self.mark_models_stale(false);
            }
            Action::Calibrate {
                dictionary_id,
                target,
            } => {
                let model = self.fresh_context_model(dictionary_id)?;
                let calibration = calibrate_threshold(corpus, model, self.dictionary(dictionary_id)?, *target)?;
                self.dictionary_mut(dictionary_id)?.gamma = Some(calibration.gamma);
                self.calibrations.insert(dictionary_id.clone(), calibration);
                self.mark_models_stale(false);
            }
            Action::SetThreshold {
                dictionary_id,
                gamma,
            } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(Error::InvalidArgument(format!("gamma {gamma} is outside (0, 1]")));
                }
                self.dictionary_mut(dictionary_id)?.gamma = Some(*gamma);
                self.calibrations.remove(dictionary_id);
                self.mark_models_stale(false);
            }
            Action::Retrain {
                scheme,
                regularization,
            } => {
                let r = self.compute_retrain(corpus, *scheme, *regularization)?;
                self.install(r, event.seq);
            }
        }
        self.events.push(event);
        Ok(())
    }

    fn dictionary_mut(&mut self, id: &str) -> Result<&mut Dictionary> {
        self.dictionaries
            .iter_mut()
            .find(|d| d.id == id)
            .ok_or_else(|| Error::UnknownDictionary(id.to_string()))
    }

    fn fresh_context_model(&self, dictionary_id: &str) -> Result<&ContextModel> {
        let model = self.context_model(dictionary_id)?;
        if self.stale_contexts.contains(dictionary_id) {
            return Err(Error::StaleModel(format!(
                "context model of {dictionary_id:?} predates its terms; retrain it"
            )));
        }
        Ok(model)
    }

    fn mark_models_stale(&mut self, labels_changed: bool) {
        if let Some(m) = &mut self.current {
            m.stale = true;
        }
        if labels_changed {
            if let Some(m) = &mut self.baseline {
                m.stale = true;
            }
        }
    }

    fn labeled_docs(&self) -> LabelDocs {
        self.labels
            .iter()
            .map(|(id, e)| (id.clone(), e.label))
            .collect()
    }

    fn feature_spec(&self, corpus: &Corpus, scheme: Scheme) -> Result<FeatureSpec> {
        match scheme {
            Scheme::BowTfidf => build_bow_spec(corpus, self.settings.bow_min_df),
            Scheme::DictionariesLiteral => {
                FeatureSpec::dictionaries(scheme, self.dictionaries.iter().map(|d| d.id.clone()))
            }
            Scheme::DictionariesSmoothed => {
                for d in &self.dictionaries {
                    self.fresh_context_model(&d.id)?;
                    if d.gamma.is_none() {
                        return Err(Error::Uncalibrated(d.id.clone()));
                    }
                }
                FeatureSpec::dictionaries(scheme, self.dictionaries.iter().map(|d| d.id.clone()))
            }
        }
    }

    fn train_scheme(
        &self,
        corpus: &Corpus,
        scheme: Scheme,
        regularization: Regularization,
        docs: &LabelDocs,
    ) -> Result<LogRegModel> {
        let spec = self.feature_spec(corpus, scheme)?;
        let vectorizer = Vectorizer::new(corpus, &spec, &self.dictionaries, &self.context_models)?;
        let examples = vectorizer.labeled(docs)?;
        train(&spec, &examples, regularization)
    }

    /// Trains without touching the session. Pair with
    /// [`TeachingSession::commit_retrain`] to publish.
    pub fn compute_retrain(
        &self,
        corpus: &Corpus,
        scheme: Scheme,
        regularization: Regularization,
    ) -> Result<Retrained> {
        if self.events.is_empty() {
            return Err(Error::Precondition("session not created".into()));
        }
        check_regularization(regularization)?;
        let docs = self.labeled_docs();
        if docs.iter().all(|d| d.1.is_positive()) || docs.iter().all(|d| !d.1.is_positive()) {
            return Err(Error::SingleClass);
        }
        let baseline_regularization = self.settings.regularization;
        let baseline = match &self.baseline {
            Some(b) if !b.stale && b.model.regularization == baseline_regularization => None,
            _ => Some(self.train_scheme(corpus, Scheme::BowTfidf, baseline_regularization, &docs)?),
        };
        let current = if scheme == Scheme::BowTfidf && regularization == baseline_regularization {
            match &baseline {
                Some(b) => b.clone(),
                None => self.baseline.as_ref().expect("fresh baseline").model.clone(),
            }
        } else {
            self.train_scheme(corpus, scheme, regularization, &docs)?
        };
        Ok(Retrained {
            based_on_seq: self.next_seq(),
            scheme,
            regularization,
            current,
            baseline,
        })
    }

    /// Publishes an off-lock retrain, unless the session moved on since
    /// it was computed.
    pub fn commit_retrain(&mut self, retrained: Retrained) -> Result<&Event> {
        if retrained.based_on_seq != self.next_seq() {
            return Err(Error::Precondition(
                "session changed while retraining; retrain again".into(),
            ));
        }
        let event = Event {
            seq: self.next_seq(),
            at_ms: now_ms(),
            action: Action::Retrain {
                scheme: retrained.scheme,
                regularization: retrained.regularization,
            },
        };
        self.install(retrained, event.seq);
        self.events.push(event);
        Ok(self.events.last().expect("just appended"))
    }

    fn install(&mut self, r: Retrained, seq: u64) {
        if let Some(b) = r.baseline {
            self.baseline = Some(TrainedModel {
                scheme: Scheme::BowTfidf,
                model: b,
                stale: false,
                trained_at_seq: seq,
            });
        }
        self.current = Some(TrainedModel {
            scheme: r.scheme,
            model: r.current,
            stale: false,
            trained_at_seq: seq,
        });
    }

    fn current_model(&self) -> Result<&TrainedModel> {
        self.current
            .as_ref()
            .ok_or_else(|| Error::MissingModel("no current model; retrain first".into()))
    }

    /// Scores documents with one of the session's models.
    pub fn score_docs(&self, corpus: &Corpus, model: &TrainedModel, doc_ids: &[String]) -> Result<Vec<f64>> {
        let vectorizer = Vectorizer::new(corpus, &model.model.spec, &self.dictionaries, &self.context_models)
            .map_err(|e| {
                Error::StaleModel(format!("{} model cannot be applied ({e}); retrain it", model.scheme))
            })?;
        vectorizer
            .vectorize_many(doc_ids)?
            .iter()
            .map(|v| model.model.predict(v))
            .collect()
    }

    /// Unlabeled documents to show the teacher next, best first.
    pub fn sample_next(&self, corpus: &Corpus, strategy: &Strategy, count: usize) -> Result<Vec<String>> {
        let unlabeled = || -> Vec<String> {
            corpus
                .documents()
                .iter()
                .filter(|d| !self.labels.contains_key(&d.id))
                .map(|d| d.id.clone())
                .collect()
        };
        match strategy {
            Strategy::Uncertainty => {
                let current = self.current.as_ref().ok_or_else(|| {
                    Error::MissingModel("uncertainty sampling needs a current model".into())
                })?;
                let ids = unlabeled();
                let scores = self.score_docs(corpus, current, &ids)?;
                Ok(rank_uncertainty(ids.into_iter().zip(scores).collect(), count))
            }
            Strategy::Disagreement => {
                let current = self.current.as_ref().ok_or_else(|| {
                    Error::MissingModel("disagreement sampling needs a current model".into())
                })?;
                let baseline = self.baseline.as_ref().ok_or_else(|| {
                    Error::MissingModel("disagreement sampling needs a bag-of-words baseline".into())
                })?;
                let ids = unlabeled();
                let a = self.score_docs(corpus, current, &ids)?;
                let b = self.score_docs(corpus, baseline, &ids)?;
                let rows = ids
                    .into_iter()
                    .zip(a.into_iter().zip(b))
                    .map(|(id, (a, b))| (id, a, b))
                    .collect();
                Ok(rank_disagreement(rows, count))
            }
            Strategy::Keyword { query } => {
                let tokens = crate::corpus::tokenize(query);
                let mut ids: Vec<String> = corpus
                    .keyword_search(&tokens)?
                    .into_iter()
                    .map(|r| r.doc_id)
                    .filter(|id| !self.labels.contains_key(id))
                    .collect();
                ids.dedup();
                ids.truncate(count);
                Ok(ids)
            }
        }
    }

    fn blindness(&self, corpus: &Corpus, current: &TrainedModel) -> Result<BlindnessReport> {
        let docs = self.labeled_docs();
        let ids: Vec<String> = docs.iter().map(|d| d.0.clone()).collect();
        let scores = self.score_docs(corpus, current, &ids)?;
        let disagreements: Vec<Disagreement> = docs
            .into_iter()
            .zip(scores)
            .filter(|((_, label), score)| (*score >= 0.5) != label.is_positive())
            .map(|((doc_id, label), score)| Disagreement { doc_id, label, score })
            .collect();
        let n = ids.len();
        Ok(BlindnessReport {
            training_error_rate: if n == 0 { 0.0 } else { disagreements.len() as f64 / n as f64 },
            disagreements,
            training_size: n,
        })
    }

    /// Training documents the current model gets wrong.
    pub fn detect_blindness(&self, corpus: &Corpus) -> Result<BlindnessReport> {
        let current = self.current_model()?;
        if current.stale {
            return Err(Error::StaleModel("current model is stale; retrain first".into()));
        }
        self.blindness(corpus, current)
    }

    /// Whether the loop has converged: training error rate below epsilon.
    pub fn loop_status(&self, corpus: &Corpus) -> Result<LoopStatus> {
        let current = self.current_model()?;
        let report = self.blindness(corpus, current)?;
        Ok(LoopStatus {
            converged: report.training_error_rate < self.epsilon,
            training_error_rate: report.training_error_rate,
            epsilon: self.epsilon,
            stale: current.stale,
        })
    }

    /// Trains a model under `scheme` on the session labels and evaluates it
    /// on the corpus' ground-truth documents the teacher has not labeled.
    pub fn metrics(&self, corpus: &Corpus, scheme: Scheme) -> Result<EvalReport> {
        let held_out: LabelDocs = corpus
            .documents()
            .iter()
            .filter(|d| !self.labels.contains_key(&d.id))
            .filter_map(|d| d.label.map(|l| (d.id.clone(), l)))
            .collect();
        if held_out.is_empty() {
            return Err(Error::Precondition("no held-out ground-truth documents".into()));
        }
        let model = match &self.current {
            Some(c) if !c.stale && c.scheme == scheme => c.model.clone(),
            _ => self.train_scheme(corpus, scheme, self.settings.regularization, &self.labeled_docs())?,
        };
        let vectorizer = Vectorizer::new(corpus, &model.spec, &self.dictionaries, &self.context_models)?;
        model.evaluate(&vectorizer.labeled(&held_out)?)
    }
}
