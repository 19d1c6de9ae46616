use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{smoothed_feature, ContextModel, SmoothMatcher};
use crate::corpus::{Corpus, Document, Label};
use crate::dictionary::{dict_feature, Dictionary, DictionaryMatcher};
use crate::error::{Error, Result};
use super::model::LabeledVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    BowTfidf,
    DictionariesLiteral,
    DictionariesSmoothed,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::BowTfidf,
        Scheme::DictionariesLiteral,
        Scheme::DictionariesSmoothed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::BowTfidf => "bow-tfidf",
            Scheme::DictionariesLiteral => "dictionaries-literal",
            Scheme::DictionariesSmoothed => "dictionaries-smoothed",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}

/// Labeled document ids.
pub type LabelDocs = Vec<(String, Label)>;

/// Context models keyed by dictionary id.
pub type ContextModels = BTreeMap<String, ContextModel>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowTerm {
    pub token: String,
    pub idf: f64,
}

/// How documents become feature vectors. Feature ids are dense: the vocab
/// position for BoW, the dictionary position otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocab: Vec<BowTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dictionary_ids: Vec<String>,
}

impl FeatureSpec {
    pub fn dictionaries(scheme: Scheme, ids: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        if scheme == Scheme::BowTfidf {
            return Err(Error::InvalidArgument(
                "bag-of-words specs come from build_bow_spec".into(),
            ));
        }
        let dictionary_ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if dictionary_ids.is_empty() {
            return Err(Error::Precondition("no dictionaries to featurize with".into()));
        }
        Ok(FeatureSpec {
            scheme,
            vocab: Vec::new(),
            dictionary_ids,
        })
    }

    pub fn n_features(&self) -> usize {
        match self.scheme {
            Scheme::BowTfidf => self.vocab.len(),
            _ => self.dictionary_ids.len(),
        }
    }

    /// Human-readable name of a feature id.
    pub fn feature_name(&self, id: usize) -> Option<&str> {
        match self.scheme {
            Scheme::BowTfidf => self.vocab.get(id).map(|t| t.token.as_str()),
            _ => self.dictionary_ids.get(id).map(String::as_str),
        }
    }
}

/// TF-IDF vocabulary: unigrams with document frequency at least `min_df`,
/// sorted, with smoothed idf `ln((1 + N) / (1 + df)) + 1`.
pub fn build_bow_spec(corpus: &Corpus, min_df: usize) -> Result<FeatureSpec> {
    if corpus.is_empty() {
        return Err(Error::Precondition("empty corpus".into()));
    }
    let n = corpus.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus.documents() {
        let mut ids = doc.token_ids().to_vec();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            *df.entry(corpus.vocabulary()[id as usize].as_str()).or_default() += 1;
        }
    }
    let vocab: Vec<BowTerm> = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df)
        .map(|(token, d)| BowTerm {
            token: token.to_string(),
            idf: ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0,
        })
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary(min_df));
    }
    Ok(FeatureSpec {
        scheme: Scheme::BowTfidf,
        vocab,
        dictionary_ids: Vec::new(),
    })
}

/// Sparse document vector; entries sorted by id, zeros never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub doc_id: String,
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn new(doc_id: impl Into<String>, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().filter(|e| e.1 != 0.0).collect();
        entries.sort_by_key(|e| e.0);
        FeatureVector {
            doc_id: doc_id.into(),
            entries,
        }
    }

    pub fn get(&self, id: usize) -> f64 {
        self.entries
            .binary_search_by_key(&id, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }
}

enum Featurizer<'a> {
    Bow {
        /// corpus token id -> (feature id, idf)
        lookup: Vec<Option<(usize, f64)>>,
    },
    Literal(Vec<DictionaryMatcher>),
    Smoothed(Vec<SmoothMatcher<'a>>),
}

/// Turns corpus documents into vectors under one spec.
pub struct Vectorizer<'a> {
    corpus: &'a Corpus,
    spec: &'a FeatureSpec,
    featurizer: Featurizer<'a>,
}

fn lookup_dicts<'d>(spec: &FeatureSpec, dicts: &'d [Dictionary]) -> Result<Vec<&'d Dictionary>> {
    spec.dictionary_ids
        .iter()
        .map(|id| {
            dicts
                .iter()
                .find(|d| &d.id == id)
                .ok_or_else(|| Error::UnknownDictionary(id.clone()))
        })
        .collect()
}

impl<'a> Vectorizer<'a> {
    pub fn new(
        corpus: &'a Corpus,
        spec: &'a FeatureSpec,
        dicts: &'a [Dictionary],
        models: &'a ContextModels,
    ) -> Result<Self> {
        let featurizer = match spec.scheme {
            Scheme::BowTfidf => {
                let by_token: HashMap<&str, (usize, f64)> = spec
                    .vocab
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (t.token.as_str(), (i, t.idf)))
                    .collect();
                let lookup = corpus
                    .vocabulary()
                    .iter()
                    .map(|t| by_token.get(t.as_str()).copied())
                    .collect();
                Featurizer::Bow { lookup }
            }
            Scheme::DictionariesLiteral => Featurizer::Literal(
                lookup_dicts(spec, dicts)?
                    .into_iter()
                    .map(|d| DictionaryMatcher::new(corpus, d))
                    .collect(),
            ),
            Scheme::DictionariesSmoothed => Featurizer::Smoothed(
                lookup_dicts(spec, dicts)?
                    .into_iter()
                    .map(|d| {
                        let model = models.get(&d.id).ok_or_else(|| {
                            Error::Precondition(format!("dictionary {:?} has no context model", d.id))
                        })?;
                        SmoothMatcher::new(corpus, model, d)
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Vectorizer {
            corpus,
            spec,
            featurizer,
        })
    }

    pub fn spec(&self) -> &FeatureSpec {
        self.spec
    }

    pub fn vectorize(&self, doc_id: &str) -> Result<FeatureVector> {
        Ok(self.vectorize_doc(self.corpus.document(doc_id)?))
    }

    pub fn vectorize_doc(&self, doc: &Document) -> FeatureVector {
        match &self.featurizer {
            Featurizer::Bow { lookup } => {
                let mut tf: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
                for &t in doc.token_ids() {
                    if let Some((id, idf)) = lookup[t as usize] {
                        tf.entry(id).or_insert((0.0, idf)).0 += 1.0;
                    }
                }
                let raw: Vec<(usize, f64)> = tf.into_iter().map(|(id, (c, idf))| (id, c * idf)).collect();
                let norm = raw.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
                FeatureVector::new(&doc.id, raw.into_iter().map(|(id, v)| (id, v / norm)))
            }
            Featurizer::Literal(matchers) => FeatureVector::new(
                &doc.id,
                matchers
                    .iter()
                    .enumerate()
                    .map(|(j, m)| (j, dict_feature(m.count(doc)))),
            ),
            Featurizer::Smoothed(matchers) => FeatureVector::new(
                &doc.id,
                matchers
                    .iter()
                    .enumerate()
                    .map(|(j, m)| (j, smoothed_feature(m.count(doc)))),
            ),
        }
    }

    /// Vectors for many documents, computed in parallel, in input order.
    pub fn vectorize_many(&self, doc_ids: &[String]) -> Result<Vec<FeatureVector>> {
        doc_ids.par_iter().map(|id| self.vectorize(id)).collect()
    }

    /// Vectors paired with their labels, in input order.
    pub fn labeled(&self, docs: &[(String, Label)]) -> Result<Vec<LabeledVector>> {
        docs.par_iter()
            .map(|(id, l)| Ok((self.vectorize(id)?, *l)))
            .collect()
    }

    pub fn vectorize_all(&self) -> Vec<FeatureVector> {
        self.corpus
            .documents()
            .par_iter()
            .map(|d| self.vectorize_doc(d))
            .collect()
    }
}

/// One-shot vectorization of a single document.
pub fn vectorize(
    corpus: &Corpus,
    spec: &FeatureSpec,
    models: &ContextModels,
    dicts: &[Dictionary],
    doc_id: &str,
) -> Result<FeatureVector> {
    Vectorizer::new(corpus, spec, dicts, models)?.vectorize(doc_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Record;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_records(texts.iter().enumerate().map(|(i, t)| Record {
            id: format!("d{i}"),
            text: t.to_string(),
            label: None,
        }))
        .unwrap()
    }

    #[test]
    fn idf_values() {
        let c = corpus(&["a b", "a c", "a"]);
        let spec = build_bow_spec(&c, 1).unwrap();
        let idf = |t: &str| spec.vocab.iter().find(|v| v.token == t).unwrap().idf;
        assert!((idf("a") - 1.0).abs() < 1e-15);
        assert!((idf("b") - (2f64.ln() + 1.0)).abs() < 1e-15);
        assert!((idf("b") - 1.6931471805599454).abs() < 1e-12);

        let spec = build_bow_spec(&c, 2).unwrap();
        assert_eq!(spec.vocab.len(), 1);
        assert!(matches!(build_bow_spec(&c, 4), Err(Error::EmptyVocabulary(4))));
    }

    #[test]
    fn bow_vectors_are_unit_length() {
        let c = corpus(&["a b b c", "a c d", "zz"]);
        let spec = build_bow_spec(&c, 1).unwrap();
        let models = ContextModels::new();
        let v = vectorize(&c, &spec, &models, &[], "d0").unwrap();
        let norm: f64 = v.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        // b: tf 2, df 1; c: tf 1, df 2.
        let id = |t: &str| spec.vocab.iter().position(|v| v.token == t).unwrap();
        let ratio = 2.0 * spec.vocab[id("b")].idf / spec.vocab[id("c")].idf;
        assert!((v.get(id("b")) / v.get(id("c")) - ratio).abs() < 1e-12);

        let spec2 = build_bow_spec(&c, 2).unwrap();
        assert!(vectorize(&c, &spec2, &models, &[], "d2").unwrap().entries.is_empty());
    }

    #[test]
    fn literal_vectors() {
        let c = corpus(&["nothing here", "x y y y"]);
        let dicts = [
            Dictionary::from_phrases("dx", "x", &["x"]),
            Dictionary::from_phrases("dy", "y", &["y"]),
        ];
        let spec = FeatureSpec::dictionaries(Scheme::DictionariesLiteral, ["dx", "dy"]).unwrap();
        let models = ContextModels::new();
        let v = vectorize(&c, &spec, &models, &dicts, "d0").unwrap();
        assert!(v.entries.is_empty());
        let v = vectorize(&c, &spec, &models, &dicts, "d1").unwrap();
        assert_eq!(v.entries.len(), 2);
        assert!((v.get(0) - 2f64.ln()).abs() < 1e-15);
        assert!((v.get(1) - 4f64.ln()).abs() < 1e-15);

        let missing = FeatureSpec::dictionaries(Scheme::DictionariesLiteral, ["dz"]).unwrap();
        assert!(matches!(
            vectorize(&c, &missing, &models, &dicts, "d0"),
            Err(Error::UnknownDictionary(_))
        ));
    }

    #[test]
    fn smoothed_scheme_needs_calibration() {
        let c = corpus(&["x y", "y x"]);
        let dicts = [Dictionary::from_phrases("dx", "x", &["x"])];
        let spec = FeatureSpec::dictionaries(Scheme::DictionariesSmoothed, ["dx"]).unwrap();
        let empty = ContextModels::new();
        assert!(vectorize(&c, &spec, &empty, &dicts, "d0").is_err());

        let mut counts = vec![(BTreeMap::new(), BTreeMap::new()); 10];
        counts[5] = ([("y".to_string(), 1)].into(), [("x".to_string(), 1)].into());
        let model = ContextModel::from_counts("dx", &counts, 1.0, vec![0.0; 11]).unwrap();
        let models: ContextModels = [("dx".to_string(), model)].into();
        assert!(matches!(
            vectorize(&c, &spec, &models, &dicts, "d0"),
            Err(Error::Uncalibrated(_))
        ));
        let calibrated = [dicts[0].clone().with_gamma(0.5)];
        // theta = 0 puts every candidate at exactly 0.5.
        let v = vectorize(&c, &spec, &models, &calibrated, "d0").unwrap();
        assert!((v.get(0) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("bow".parse::<Scheme>().is_err());
    }
}
