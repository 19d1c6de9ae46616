use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::window::{instance_from_doc, ContextInstance, WINDOW_COUNT};
use crate::corpus::Corpus;
use crate::dictionary::{Dictionary, DictionaryMatcher};
use crate::error::{Error, Result};
use crate::logistic::{sigmoid, Problem, Regularization, SparseRow};

pub const CONTEXT_MODEL_VERSION: &str = "context-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub negative_ratio: f64,
    pub max_positives: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            negative_ratio: 10.0,
            max_positives: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextTrainConfig {
    pub l2_lambda: f64,
    pub laplace_alpha: f64,
}

impl Default for ContextTrainConfig {
    fn default() -> Self {
        ContextTrainConfig {
            l2_lambda: 1.0,
            laplace_alpha: 1.0,
        }
    }
}

/// Labeled context instances for one dictionary.
///
/// Positives are the literal matches of the dictionary (uniformly
/// subsampled beyond `max_positives`); negatives are unigram positions
/// outside every literal match, drawn without replacement.
pub fn sample_training_instances(
    corpus: &Corpus,
    dict: &Dictionary,
    config: &SamplingConfig,
) -> Result<Vec<ContextInstance>> {
    if config.negative_ratio <= 0.0 || !config.negative_ratio.is_finite() {
        return Err(Error::InvalidArgument("negative_ratio must be positive".into()));
    }
    let matcher = DictionaryMatcher::new(corpus, dict);
    let mut positives: Vec<(usize, usize, usize)> = Vec::new();
    let mut free: Vec<(usize, usize)> = Vec::new();
    for (d, doc) in corpus.documents().iter().enumerate() {
        let mut covered = vec![false; doc.len()];
        for m in matcher.find(doc) {
            positives.push((d, m.start, m.length));
            covered[m.start..m.start + m.length].iter_mut().for_each(|c| *c = true);
        }
        free.extend((0..doc.len()).filter(|&p| !covered[p]).map(|p| (d, p)));
    }
    if positives.is_empty() {
        return Err(Error::NoCorpusSupport(dict.id.clone()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    if positives.len() > config.max_positives {
        let mut keep = index::sample(&mut rng, positives.len(), config.max_positives).into_vec();
        keep.sort_unstable();
        positives = keep.into_iter().map(|i| positives[i]).collect();
    }
    let wanted = (config.negative_ratio * positives.len() as f64).round() as usize;
    let mut picked = index::sample(&mut rng, free.len(), wanted.min(free.len())).into_vec();
    picked.sort_unstable();

    let docs = corpus.documents();
    let mut instances = Vec::with_capacity(positives.len() + picked.len());
    instances.extend(
        positives
            .iter()
            .map(|&(d, start, length)| instance_from_doc(&docs[d], start, length, Some(true))),
    );
    instances.extend(picked.into_iter().map(|i| {
        let (d, p) = free[i];
        instance_from_doc(&docs[d], p, 1, Some(false))
    }));
    Ok(instances)
}

/// Token counts of one window by token text: (inside, outside).
pub type WindowCountTables = (BTreeMap<String, u64>, BTreeMap<String, u64>);

/// Per-window token counts for the in- and out-of-dictionary classes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub inside: BTreeMap<u32, u64>,
    pub outside: BTreeMap<u32, u64>,
    pub inside_total: u64,
    pub outside_total: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub inside: usize,
    pub outside: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
}

/// Naive-Bayes window statistics combined by a logistic layer.
///
/// Window `i` contributes the log-likelihood ratio of its unigram set under
/// Laplace-smoothed per-class estimates; `theta` (bias first) weighs the ten
/// ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextModel {
    pub version: String,
    pub dictionary_id: String,
    /// Sorted token list; a token's id is its index.
    pub vocab: Vec<String>,
    pub window_counts: Vec<WindowCounts>,
    pub theta: Vec<f64>,
    pub laplace_alpha: f64,
    pub l2_lambda: f64,
    pub trained_on: ClassCounts,
    #[serde(default)]
    pub fit: FitSummary,
    #[serde(skip)]
    vocab_index: HashMap<String, u32>,
}

impl ContextModel {
    /// A model with no statistics. Every scoring call fails until trained.
    pub fn untrained(dictionary_id: impl Into<String>) -> Self {
        ContextModel {
            version: CONTEXT_MODEL_VERSION.into(),
            dictionary_id: dictionary_id.into(),
            vocab: Vec::new(),
            window_counts: vec![WindowCounts::default(); WINDOW_COUNT],
            theta: vec![0.0; WINDOW_COUNT + 1],
            laplace_alpha: 1.0,
            l2_lambda: 1.0,
            trained_on: ClassCounts::default(),
            fit: FitSummary::default(),
            vocab_index: HashMap::new(),
        }
    }

    /// Builds a model directly from count tables; `counts[i]` holds the
    /// (inside, outside) token counts of window `i`.
    pub fn from_counts(
        dictionary_id: impl Into<String>,
        counts: &[WindowCountTables],
        laplace_alpha: f64,
        theta: Vec<f64>,
    ) -> Result<Self> {
        if counts.len() != WINDOW_COUNT || theta.len() != WINDOW_COUNT + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {WINDOW_COUNT} windows and {} weights",
                WINDOW_COUNT + 1
            )));
        }
        let vocab: BTreeSet<&String> = counts
            .iter()
            .flat_map(|(a, b)| a.keys().chain(b.keys()))
            .collect();
        let mut model = Self::untrained(dictionary_id);
        model.vocab = vocab.into_iter().cloned().collect();
        model.rebuild_index();
        model.laplace_alpha = laplace_alpha;
        model.theta = theta;
        for (w, (inside, outside)) in counts.iter().enumerate() {
            let wc = &mut model.window_counts[w];
            for (t, &c) in inside {
                wc.inside.insert(model.vocab_index[t], c);
                wc.inside_total += c;
            }
            for (t, &c) in outside {
                wc.outside.insert(model.vocab_index[t], c);
                wc.outside_total += c;
            }
        }
        model.trained_on = ClassCounts {
            inside: 1,
            outside: 1,
        };
        Ok(model)
    }

    /// Restores the lookup table after deserialization and checks the
    /// structural invariants.
    pub fn prepare(mut self) -> Result<Self> {
        if self.version != CONTEXT_MODEL_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported context model version {:?}",
                self.version
            )));
        }
        if self.window_counts.len() != WINDOW_COUNT || self.theta.len() != WINDOW_COUNT + 1 {
            return Err(Error::InvalidArgument("malformed context model".into()));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite context weights".into()));
        }
        for wc in &self.window_counts {
            if wc.inside.values().sum::<u64>() != wc.inside_total
                || wc.outside.values().sum::<u64>() != wc.outside_total
            {
                return Err(Error::InvalidArgument("count totals do not add up".into()));
            }
            if wc
                .inside
                .keys()
                .chain(wc.outside.keys())
                .any(|&t| t as usize >= self.vocab.len())
            {
                return Err(Error::InvalidArgument("count for unknown token".into()));
            }
        }
        self.rebuild_index();
        Ok(self)
    }

    fn rebuild_index(&mut self) {
        self.vocab_index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn is_trained(&self) -> bool {
        self.trained_on.inside > 0 && self.trained_on.outside > 0
    }

    fn ensure_trained(&self) -> Result<()> {
        if self.is_trained() {
            Ok(())
        } else {
            Err(Error::UntrainedModel)
        }
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.vocab_index.get(token).copied()
    }

    /// `log p(u | in, w) - log p(u | out, w)` for one token; `None` means a
    /// token outside the vocabulary, which receives only the Laplace mass.
    pub(crate) fn token_log_ratio(&self, window: usize, token: Option<u32>) -> f64 {
        let wc = &self.window_counts[window];
        let alpha = self.laplace_alpha;
        let v = self.vocab.len() as f64;
        let (a, b) = match token {
            Some(t) => (
                wc.inside.get(&t).copied().unwrap_or(0),
                wc.outside.get(&t).copied().unwrap_or(0),
            ),
            None => (0, 0),
        };
        let p_in = (a as f64 + alpha) / (wc.inside_total as f64 + alpha * v);
        let p_out = (b as f64 + alpha) / (wc.outside_total as f64 + alpha * v);
        p_in.ln() - p_out.ln()
    }

    /// Naive-Bayes log odds of window `window` (0-based) for a unigram set.
    /// Duplicates in `unigrams` count once; an empty set gives 0.
    pub fn window_log_odds<S: AsRef<str>>(&self, window: usize, unigrams: &[S]) -> Result<f64> {
        self.ensure_trained()?;
        if window >= WINDOW_COUNT {
            return Err(Error::InvalidArgument(format!("window index {window} out of range")));
        }
        let set: BTreeSet<&str> = unigrams.iter().map(AsRef::as_ref).collect();
        Ok(set
            .into_iter()
            .map(|u| self.token_log_ratio(window, self.token_id(u)))
            .sum())
    }

    /// The ten context features of an instance.
    pub fn features(&self, instance: &ContextInstance) -> Result<[f64; WINDOW_COUNT]> {
        self.ensure_trained()?;
        let mut out = [0.0; WINDOW_COUNT];
        for (w, window) in instance.windows.iter().enumerate() {
            out[w] = self.window_log_odds(w, window)?;
        }
        Ok(out)
    }

    pub(crate) fn combine(&self, features: &[f64; WINDOW_COUNT]) -> f64 {
        let z = self.theta[0]
            + features
                .iter()
                .zip(&self.theta[1..])
                .map(|(c, t)| c * t)
                .sum::<f64>();
        sigmoid(z)
    }

    /// Probability that the instance's n-gram belongs to the dictionary.
    pub fn predict(&self, instance: &ContextInstance) -> Result<f64> {
        Ok(self.combine(&self.features(instance)?))
    }
}

pub fn nb_window_logodds<S: AsRef<str>>(
    model: &ContextModel,
    window: usize,
    unigrams: &[S],
) -> Result<f64> {
    model.window_log_odds(window, unigrams)
}

pub fn predict_membership(model: &ContextModel, instance: &ContextInstance) -> Result<f64> {
    model.predict(instance)
}

fn labels_of(instances: &[ContextInstance]) -> Result<Vec<f64>> {
    instances
        .iter()
        .map(|i| {
            i.inside.map(|b| if b { 1.0 } else { 0.0 }).ok_or_else(|| {
                Error::InvalidArgument(format!("unlabeled instance at {:?}", i.ngram))
            })
        })
        .collect()
}

/// Accumulates naive-Bayes counts from labeled instances.
pub fn count_windows(
    dictionary_id: &str,
    instances: &[ContextInstance],
    laplace_alpha: f64,
) -> Result<ContextModel> {
    let labels = labels_of(instances)?;
    let inside = labels.iter().filter(|&&y| y == 1.0).count();
    if inside == 0 || inside == labels.len() {
        return Err(Error::SingleClass);
    }
    if laplace_alpha.is_nan() || laplace_alpha <= 0.0 {
        return Err(Error::InvalidArgument("laplace_alpha must be positive".into()));
    }
    let vocab: BTreeSet<&String> = instances
        .iter()
        .flat_map(|i| i.windows.iter().flatten())
        .collect();
    let mut model = ContextModel::untrained(dictionary_id);
    model.vocab = vocab.into_iter().cloned().collect();
    model.rebuild_index();
    model.laplace_alpha = laplace_alpha;
    for (instance, &y) in instances.iter().zip(&labels) {
        for (w, window) in instance.windows.iter().enumerate() {
            let mut seen = HashSet::new();
            let wc = &mut model.window_counts[w];
            for token in window {
                if !seen.insert(token) {
                    continue;
                }
                let id = model.vocab_index[token];
                if y == 1.0 {
                    *wc.inside.entry(id).or_default() += 1;
                    wc.inside_total += 1;
                } else {
                    *wc.outside.entry(id).or_default() += 1;
                    wc.outside_total += 1;
                }
            }
        }
    }
    model.trained_on = ClassCounts {
        inside,
        outside: labels.len() - inside,
    };
    Ok(model)
}

/// The logistic layer's training rows: one row of ten window features per
/// instance.
pub fn feature_rows(model: &ContextModel, instances: &[ContextInstance]) -> Result<Vec<SparseRow>> {
    instances
        .iter()
        .map(|i| {
            Ok(model
                .features(i)?
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, &v)| (j, v))
                .collect())
        })
        .collect()
}

/// Fits naive-Bayes counts and then the logistic weights on the same
/// instances.
pub fn train_context_model(
    dictionary_id: &str,
    instances: &[ContextInstance],
    config: &ContextTrainConfig,
) -> Result<ContextModel> {
    let mut model = count_windows(dictionary_id, instances, config.laplace_alpha)?;
    let rows = feature_rows(&model, instances)?;
    let labels = labels_of(instances)?;
    let problem = Problem::new(&rows, &labels, WINDOW_COUNT)?;
    let fit = problem.train(Regularization::L2(config.l2_lambda));
    model.theta = fit.params;
    model.l2_lambda = config.l2_lambda;
    model.fit = FitSummary {
        iterations: fit.iterations,
        objective: fit.objective,
        gradient_norm: fit.gradient_norm,
    };
    Ok(model)
}

/// Samples instances from the corpus and trains a model in one go.
pub fn fit_context_model(
    corpus: &Corpus,
    dict: &Dictionary,
    sampling: &SamplingConfig,
    config: &ContextTrainConfig,
) -> Result<ContextModel> {
    dict.ensure_valid()?;
    let instances = sample_training_instances(corpus, dict, sampling)?;
    train_context_model(&dict.id, &instances, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{NgramRef, Record};

    fn map(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn toy_model(theta: Vec<f64>) -> ContextModel {
        let mut counts = vec![(BTreeMap::new(), BTreeMap::new()); WINDOW_COUNT];
        counts[0] = (map(&[("a", 3)]), map(&[("a", 1), ("b", 2)]));
        ContextModel::from_counts("d", &counts, 1.0, theta).unwrap()
    }

    fn instance(windows: [&[&str]; WINDOW_COUNT], inside: bool) -> ContextInstance {
        ContextInstance {
            ngram: NgramRef::new("x", 0, 1),
            windows: windows.map(|w| w.iter().map(|t| t.to_string()).collect()),
            inside: Some(inside),
        }
    }

    #[test]
    fn toy_log_odds() {
        let m = toy_model(vec![0.0; 11]);
        let empty: [&str; 0] = [];
        assert_eq!(nb_window_logodds(&m, 0, &empty).unwrap(), 0.0);
        let a = nb_window_logodds(&m, 0, &["a"]).unwrap();
        assert!((a - 2f64.ln()).abs() < 1e-12);
        let ab = nb_window_logodds(&m, 0, &["a", "b"]).unwrap();
        let expected = (4.0f64 / 5.0).ln() + (1.0f64 / 5.0).ln() - (2.0f64 / 5.0).ln() - (3.0f64 / 5.0).ln();
        assert!((ab - expected).abs() < 1e-12);
        assert!((ab - -0.4054651081081644).abs() < 1e-12);
        // Duplicates count once.
        assert_eq!(nb_window_logodds(&m, 0, &["a", "a"]).unwrap(), a);
        assert!(nb_window_logodds(&m, 10, &["a"]).is_err());
    }

    #[test]
    fn toy_prediction() {
        let m = toy_model(vec![0.0; 11]);
        let mut windows: [&[&str]; WINDOW_COUNT] = [&[]; WINDOW_COUNT];
        windows[0] = &["a"];
        assert_eq!(m.predict(&instance(windows, true)).unwrap(), 0.5);

        let mut theta = vec![0.0; 11];
        theta[1] = 1.0;
        let m = toy_model(theta);
        let p = predict_membership(&m, &instance(windows, true)).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);

        let mut theta = vec![0.0; 11];
        theta[0] = 50.0;
        let m = toy_model(theta);
        assert!(m.predict(&instance(windows, true)).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn untrained_model_errors() {
        let m = ContextModel::untrained("d");
        assert!(matches!(
            nb_window_logodds(&m, 0, &["a"]),
            Err(Error::UntrainedModel)
        ));
        let i = instance([&[]; WINDOW_COUNT], true);
        assert!(matches!(m.predict(&i), Err(Error::UntrainedModel)));
    }

    #[test]
    fn separable_toy_set() {
        let mut instances = Vec::new();
        for k in 0..20 {
            let mut w: [&[&str]; WINDOW_COUNT] = [&[]; WINDOW_COUNT];
            w[0] = &["in"];
            w[6] = if k % 2 == 0 { &["x", "y"] } else { &["y"] };
            instances.push(instance(w, true));
            let mut w: [&[&str]; WINDOW_COUNT] = [&[]; WINDOW_COUNT];
            w[0] = &["out"];
            w[6] = if k % 3 == 0 { &["x"] } else { &["y", "z"] };
            instances.push(instance(w, false));
        }
        let m = train_context_model("d", &instances, &ContextTrainConfig::default()).unwrap();
        for i in &instances {
            let p = m.predict(i).unwrap();
            assert_eq!(p >= 0.5, i.inside.unwrap(), "{p}");
        }
    }

    #[test]
    fn identical_contexts_fall_back_to_prior() {
        let mut instances = Vec::new();
        let w: [&[&str]; WINDOW_COUNT] = [&["same"], &["ctx"], &[], &[], &[], &["after"], &[], &[], &[], &[]];
        for k in 0..40 {
            instances.push(instance(w, k < 10));
        }
        let m = train_context_model("d", &instances, &ContextTrainConfig::default()).unwrap();
        assert!(m.theta[1..].iter().all(|t| t.abs() < 1e-4), "{:?}", m.theta);
        let p = m.predict(&instances[0]).unwrap();
        assert!((p - 0.25).abs() < 1e-4, "{p}");
    }

    #[test]
    fn single_class_is_rejected() {
        let instances = vec![instance([&["a"]; WINDOW_COUNT], true)];
        assert!(matches!(
            train_context_model("d", &instances, &ContextTrainConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    fn corpus(texts: &[String]) -> Corpus {
        Corpus::from_records(texts.iter().enumerate().map(|(i, t)| Record {
            id: format!("d{i:03}"),
            text: t.clone(),
            label: None,
        }))
        .unwrap()
    }

    #[test]
    fn sampling_counts_and_determinism() {
        let texts: Vec<String> = (0..100)
            .map(|i| format!("alpha beta target gamma delta {i} epsilon zeta eta theta iota kappa"))
            .collect();
        let c = corpus(&texts);
        let d = Dictionary::from_phrases("t", "t", &["target"]);
        let cfg = SamplingConfig::default();
        let a = sample_training_instances(&c, &d, &cfg).unwrap();
        let pos = a.iter().filter(|i| i.inside == Some(true)).count();
        let neg = a.iter().filter(|i| i.inside == Some(false)).count();
        assert_eq!((pos, neg), (100, 1000));
        assert!(a
            .iter()
            .filter(|i| i.inside == Some(false))
            .all(|i| c.ngram_at(&i.ngram).unwrap() != ["target"]));
        assert_eq!(a, sample_training_instances(&c, &d, &cfg).unwrap());

        let capped = SamplingConfig {
            max_positives: 30,
            negative_ratio: 2.0,
            seed: 9,
        };
        let b = sample_training_instances(&c, &d, &capped).unwrap();
        assert_eq!(b.iter().filter(|i| i.inside == Some(true)).count(), 30);
        assert_eq!(b.iter().filter(|i| i.inside == Some(false)).count(), 60);

        let absent = Dictionary::from_phrases("z", "z", &["zzz"]);
        assert!(matches!(
            sample_training_instances(&c, &absent, &cfg),
            Err(Error::NoCorpusSupport(_))
        ));
    }

    #[test]
    fn serialization_round_trip() {
        let m = toy_model(vec![0.5; 11]);
        let json = serde_json::to_string(&m).unwrap();
        let back: ContextModel = serde_json::from_str(&json).unwrap();
        let back = back.prepare().unwrap();
        assert_eq!(back, m);
        assert_eq!(
            nb_window_logodds(&back, 0, &["a"]).unwrap(),
            nb_window_logodds(&m, 0, &["a"]).unwrap()
        );

        let mut bad = m.clone();
        bad.window_counts[0].inside_total += 1;
        let json = serde_json::to_string(&bad).unwrap();
        let back: ContextModel = serde_json::from_str(&json).unwrap();
        assert!(back.prepare().is_err());
    }
}
