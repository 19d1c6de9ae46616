//! Session operations shared by the HTTP service and the `session` CLI
//! commands. Requests and responses are the JSON bodies of the service.

use serde::{Deserialize, Serialize};

use semfeat_core::classifier::{EvalReport, Scheme, TrainingMeta};
use semfeat_core::context::{
    rank_contexts, suggest_terms, trigger_percentage, Calibration, ContextRow, ContextTrainConfig,
    FitSummary, SamplingConfig, SuggestConfig, SuggestionList,
};
use semfeat_core::logistic::Regularization;
use semfeat_core::teach::{
    create_session, BlindnessReport, CreateOptions, LoopStatus, SessionSettings, Strategy,
    TeachingSession, TrainedModel,
};
use semfeat_core::{tokenize, Corpus, Dictionary, Label};

use crate::config::Defaults;
use crate::error::{AppError, Result};

pub const DEFAULT_COUNT: usize = 10;
pub const DEFAULT_CONTEXT_LIMIT: usize = 100;
pub const DEFAULT_SUGGESTIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub id: String,
    #[serde(default)]
    pub task: String,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub auto_seed: bool,
    pub regularization: Option<Regularization>,
    pub bow_min_df: Option<usize>,
}

pub fn create(corpus: &Corpus, defaults: &Defaults, req: CreateSessionRequest) -> Result<TeachingSession> {
    crate::store::validate_session_id(&req.id)?;
    let mut options = CreateOptions::new(req.id, req.task);
    options.epsilon = req.epsilon.unwrap_or(defaults.epsilon);
    options.seed = req.seed;
    options.auto_seed = req.auto_seed;
    options.settings = SessionSettings {
        regularization: req.regularization.unwrap_or(Regularization::L2(defaults.lambda)),
        bow_min_df: req.bow_min_df.unwrap_or(SessionSettings::default().bow_min_df),
    };
    Ok(create_session(corpus, options)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRequest {
    pub doc_id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub seq: u64,
    pub doc_id: String,
    pub label: Label,
    pub training_size: usize,
}

pub fn label(s: &mut TeachingSession, corpus: &Corpus, req: LabelRequest) -> Result<LabelResponse> {
    let seq = s.add_label(corpus, &req.doc_id, req.label)?.seq;
    Ok(LabelResponse {
        seq,
        doc_id: req.doc_id,
        label: req.label,
        training_size: s.training_size(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NextQuery {
    pub strategy: Option<String>,
    pub count: Option<usize>,
    pub query: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextResponse {
    #[serde(flatten)]
    pub strategy: Strategy,
    pub doc_ids: Vec<String>,
}

pub fn next(s: &TeachingSession, corpus: &Corpus, q: NextQuery) -> Result<NextResponse> {
    let strategy = Strategy::parse(q.strategy.as_deref().unwrap_or("uncertainty"), q.query.as_deref())?;
    let doc_ids = s.sample_next(corpus, &strategy, q.count.unwrap_or(DEFAULT_COUNT))?;
    Ok(NextResponse { strategy, doc_ids })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrainRequest {
    pub scheme: Scheme,
    pub regularization: Option<Regularization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub scheme: Scheme,
    pub stale: bool,
    pub trained_at_seq: u64,
    pub regularization: Regularization,
    pub features: usize,
    pub nonzero_weights: usize,
    pub meta: TrainingMeta,
}

impl From<&TrainedModel> for ModelSummary {
    fn from(m: &TrainedModel) -> Self {
        ModelSummary {
            scheme: m.scheme,
            stale: m.stale,
            trained_at_seq: m.trained_at_seq,
            regularization: m.model.regularization,
            features: m.model.spec.n_features(),
            nonzero_weights: m.model.nonzero_weight_count(),
            meta: m.model.meta.clone(),
        }
    }
}

pub fn retrain(s: &mut TeachingSession, corpus: &Corpus, req: RetrainRequest) -> Result<ModelSummary> {
    let reg = req.regularization.unwrap_or(s.settings.regularization);
    s.retrain_with(corpus, req.scheme, reg)?;
    current_summary(s)
}

pub fn current_summary(s: &TeachingSession) -> Result<ModelSummary> {
    s.current
        .as_ref()
        .map(ModelSummary::from)
        .ok_or_else(|| semfeat_core::Error::MissingModel("no current model".into()).into())
}

pub fn blindness(s: &TeachingSession, corpus: &Corpus) -> Result<BlindnessReport> {
    Ok(s.detect_blindness(corpus)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextState {
    Missing,
    Fresh,
    Stale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryStatus {
    pub id: String,
    pub name: String,
    pub terms: usize,
    pub gamma: Option<f64>,
    pub context_model: ContextState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub id: String,
    pub task: String,
    pub epsilon: f64,
    pub next_seq: u64,
    pub training_size: usize,
    pub positives: usize,
    pub negatives: usize,
    pub dictionaries: Vec<DictionaryStatus>,
    pub current: Option<ModelSummary>,
    pub baseline: Option<ModelSummary>,
    /// Present while a current model exists and still fits the session's
    /// features.
    pub loop_status: Option<LoopStatus>,
}

pub fn status(s: &TeachingSession, corpus: &Corpus) -> Result<SessionStatus> {
    let positives = s.labels.values().filter(|e| e.label.is_positive()).count();
    let dictionaries = s
        .dictionaries
        .iter()
        .map(|d| DictionaryStatus {
            id: d.id.clone(),
            name: d.name.clone(),
            terms: d.terms.len(),
            gamma: d.gamma,
            context_model: if !s.context_models.contains_key(&d.id) {
                ContextState::Missing
            } else if s.stale_contexts.contains(&d.id) {
                ContextState::Stale
            } else {
                ContextState::Fresh
            },
        })
        .collect();
    let loop_status = s.loop_status(corpus).ok();
    Ok(SessionStatus {
        id: s.id.clone(),
        task: s.task.clone(),
        epsilon: s.epsilon,
        next_seq: s.next_seq(),
        training_size: s.training_size(),
        positives,
        negatives: s.training_size() - positives,
        dictionaries,
        current: s.current.as_ref().map(ModelSummary::from),
        baseline: s.baseline.as_ref().map(ModelSummary::from),
        loop_status,
    })
}

/// Body of a dictionary upsert. Terms come either pre-tokenized or as
/// free-text phrases that are tokenized like documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryBody {
    pub name: Option<String>,
    pub terms: Option<Vec<Vec<String>>>,
    pub phrases: Option<Vec<String>>,
    pub gamma: Option<f64>,
}

impl DictionaryBody {
    pub fn into_dictionary(self, id: &str) -> Result<Dictionary> {
        let terms = match (self.terms, self.phrases) {
            (Some(t), None) => t,
            (None, Some(p)) => p.iter().map(|p| tokenize(p)).collect(),
            _ => {
                return Err(AppError::BadRequest(
                    "give exactly one of `terms` and `phrases`".into(),
                ))
            }
        };
        Ok(Dictionary {
            id: id.to_string(),
            name: self.name.unwrap_or_else(|| id.to_string()),
            terms,
            gamma: self.gamma,
        })
    }
}

pub fn put_dictionary(s: &mut TeachingSession, corpus: &Corpus, dict: Dictionary) -> Result<Dictionary> {
    let report = dict.validate();
    if !report.is_empty() {
        return Err(AppError::InvalidDictionary {
            id: dict.id,
            findings: report.findings,
        });
    }
    let id = dict.id.clone();
    s.upsert_dictionary(corpus, dict)?;
    Ok(s.dictionary(&id)?.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removed {
    pub removed: String,
}

pub fn delete_dictionary(s: &mut TeachingSession, corpus: &Corpus, id: &str) -> Result<Removed> {
    s.remove_dictionary(corpus, id)?;
    Ok(Removed { removed: id.into() })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainContextRequest {
    pub negative_ratio: Option<f64>,
    pub max_positives: Option<usize>,
    pub seed: Option<u64>,
    pub l2_lambda: Option<f64>,
    pub laplace_alpha: Option<f64>,
}

impl TrainContextRequest {
    pub fn resolve(&self, defaults: &Defaults) -> (SamplingConfig, ContextTrainConfig) {
        let base = SamplingConfig::default();
        let sampling = SamplingConfig {
            negative_ratio: self.negative_ratio.unwrap_or(defaults.negative_ratio),
            max_positives: self.max_positives.unwrap_or(base.max_positives),
            seed: self.seed.unwrap_or(base.seed),
        };
        let config = ContextTrainConfig {
            l2_lambda: self.l2_lambda.unwrap_or(defaults.lambda),
            laplace_alpha: self.laplace_alpha.unwrap_or(defaults.laplace_alpha),
        };
        (sampling, config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextModelSummary {
    pub dictionary_id: String,
    pub positives: usize,
    pub negatives: usize,
    pub vocabulary: usize,
    pub theta: Vec<f64>,
    pub fit: FitSummary,
}

pub fn train_context(
    s: &mut TeachingSession,
    corpus: &Corpus,
    defaults: &Defaults,
    id: &str,
    req: TrainContextRequest,
) -> Result<ContextModelSummary> {
    let (sampling, config) = req.resolve(defaults);
    s.train_context(corpus, id, sampling, config)?;
    let m = s.context_model(id)?;
    Ok(ContextModelSummary {
        dictionary_id: id.into(),
        positives: m.trained_on.inside,
        negatives: m.trained_on.outside,
        vocabulary: m.vocab.len(),
        theta: m.theta.clone(),
        fit: m.fit.clone(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateRequest {
    pub target: Option<f64>,
}

pub fn calibrate(
    s: &mut TeachingSession,
    corpus: &Corpus,
    defaults: &Defaults,
    id: &str,
    req: CalibrateRequest,
) -> Result<Calibration> {
    s.calibrate(corpus, id, req.target.or(defaults.calibration_target))?;
    Ok(s.calibrations
        .get(id)
        .cloned()
        .expect("calibrate records its result"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRequest {
    pub gamma: f64,
}

pub fn set_threshold(s: &mut TeachingSession, corpus: &Corpus, id: &str, req: ThresholdRequest) -> Result<Dictionary> {
    s.set_threshold(corpus, id, req.gamma)?;
    Ok(s.dictionary(id)?.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextsQuery {
    pub term: String,
    pub limit: Option<usize>,
    /// Threshold to report a trigger percentage for; defaults to the
    /// dictionary's own.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextsResponse {
    pub term: Vec<String>,
    /// Occurrences of the term in the corpus.
    pub total: usize,
    pub rows: Vec<ContextRow>,
    pub gamma: Option<f64>,
    pub trigger_percentage: Option<f64>,
}

pub fn contexts(s: &TeachingSession, corpus: &Corpus, id: &str, q: ContextsQuery) -> Result<ContextsResponse> {
    let dict = s.dictionary(id)?;
    let model = s.context_model(id)?;
    let term = tokenize(&q.term);
    if term.is_empty() {
        return Err(AppError::BadRequest("term is empty".into()));
    }
    let gamma = q.gamma.or(dict.gamma);
    // The percentage is read off the full ranking, not the page shown.
    let mut rows = rank_contexts(corpus, model, &term, usize::MAX)?;
    let trigger = gamma.and_then(|g| trigger_percentage(&rows, g));
    let total = rows.len();
    rows.truncate(q.limit.unwrap_or(DEFAULT_CONTEXT_LIMIT));
    Ok(ContextsResponse {
        term,
        total,
        rows,
        gamma,
        trigger_percentage: trigger,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestionsQuery {
    pub k: Option<usize>,
    pub min_occurrences: Option<usize>,
    pub max_ngram_len: Option<usize>,
}

pub fn suggestions(s: &TeachingSession, corpus: &Corpus, id: &str, q: SuggestionsQuery) -> Result<SuggestionList> {
    let dict = s.dictionary(id)?;
    let model = s.context_model(id)?;
    let base = SuggestConfig::default();
    let config = SuggestConfig {
        max_ngram_len: q.max_ngram_len.unwrap_or(base.max_ngram_len),
        min_occurrences: q.min_occurrences.unwrap_or(base.min_occurrences),
        top_k: q.k.unwrap_or(DEFAULT_SUGGESTIONS),
    };
    Ok(suggest_terms(corpus, model, dict, &config)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsQuery {
    pub scheme: Scheme,
}

pub fn metrics(s: &TeachingSession, corpus: &Corpus, q: MetricsQuery) -> Result<EvalReport> {
    Ok(s.metrics(corpus, q.scheme)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocResponse {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    /// Ground truth carried by the corpus, if any.
    pub label: Option<Label>,
}

pub fn doc(corpus: &Corpus, id: &str) -> Result<DocResponse> {
    let d = corpus.document(id)?;
    Ok(DocResponse {
        id: d.id.clone(),
        text: d.text.clone(),
        tokens: d.tokens.clone(),
        label: d.label,
    })
}
