use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::ContextModel;
use super::window::{window_ranges, WINDOW_COUNT};
use crate::corpus::{Corpus, Document, NgramRef};
use crate::dictionary::{dict_feature, Dictionary, DictionaryMatcher};
use crate::error::{Error, Result};

/// Scores spans of one corpus under one context model.
///
/// Per-token log ratios are looked up by corpus token id, and window sums
/// run in lexicographic token order so that results are bit-identical to
/// [`ContextModel::predict`] on the extracted instance.
pub struct ContextScorer<'a> {
    model: &'a ContextModel,
    ratios: Vec<[f64; WINDOW_COUNT]>,
    lex_rank: Vec<u32>,
}

impl<'a> ContextScorer<'a> {
    pub fn new(corpus: &Corpus, model: &'a ContextModel) -> Result<Self> {
        if !model.is_trained() {
            return Err(Error::UntrainedModel);
        }
        let vocab = corpus.vocabulary();
        let ratios = vocab
            .iter()
            .map(|t| {
                let id = model.token_id(t);
                std::array::from_fn(|w| model.token_log_ratio(w, id))
            })
            .collect();
        let mut order: Vec<u32> = (0..vocab.len() as u32).collect();
        order.sort_by(|&a, &b| vocab[a as usize].cmp(&vocab[b as usize]));
        let mut lex_rank = vec![0; vocab.len()];
        for (rank, &t) in order.iter().enumerate() {
            lex_rank[t as usize] = rank as u32;
        }
        Ok(ContextScorer {
            model,
            ratios,
            lex_rank,
        })
    }

    pub fn model(&self) -> &ContextModel {
        self.model
    }

    pub fn score(&self, doc: &Document, start: usize, length: usize) -> f64 {
        let ids = doc.token_ids();
        let mut features = [0.0; WINDOW_COUNT];
        let mut buf: Vec<(u32, u32)> = Vec::with_capacity(16);
        for (w, range) in window_ranges(start, length, ids.len()).into_iter().enumerate() {
            buf.clear();
            buf.extend(ids[range].iter().map(|&t| (self.lex_rank[t as usize], t)));
            buf.sort_unstable();
            buf.dedup();
            features[w] = buf.iter().map(|&(_, t)| self.ratios[t as usize][w]).sum();
        }
        self.model.combine(&features)
    }
}

/// Candidate spans of a document: every unigram position plus every
/// literal multi-token dictionary match, ordered by (start, length).
pub(crate) fn candidate_spans(matcher: &DictionaryMatcher, doc: &Document) -> Vec<(usize, usize)> {
    let mut spans: Vec<(usize, usize)> = (0..doc.len()).map(|p| (p, 1)).collect();
    spans.extend(
        matcher
            .find(doc)
            .into_iter()
            .filter(|m| m.length > 1)
            .map(|m| (m.start, m.length)),
    );
    spans.sort_unstable();
    spans
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothMatch {
    pub ngram: NgramRef,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothMatchList {
    pub dictionary_id: String,
    pub doc_id: String,
    pub matches: Vec<SmoothMatch>,
}

impl SmoothMatchList {
    pub fn count(&self) -> usize {
        self.matches.len()
    }
}

fn check_pair(model: &ContextModel, dict: &Dictionary) -> Result<()> {
    if model.dictionary_id != dict.id {
        return Err(Error::InvalidArgument(format!(
            "context model belongs to {:?}, not {:?}",
            model.dictionary_id, dict.id
        )));
    }
    Ok(())
}

/// Smooth matcher for one calibrated dictionary over one corpus.
pub struct SmoothMatcher<'a> {
    scorer: ContextScorer<'a>,
    literal: DictionaryMatcher,
    gamma: f64,
}

impl<'a> SmoothMatcher<'a> {
    pub fn new(corpus: &Corpus, model: &'a ContextModel, dict: &Dictionary) -> Result<Self> {
        check_pair(model, dict)?;
        let gamma = dict
            .gamma
            .ok_or_else(|| Error::Uncalibrated(dict.id.clone()))?;
        Self::with_gamma(corpus, model, dict, gamma)
    }

    pub fn with_gamma(
        corpus: &Corpus,
        model: &'a ContextModel,
        dict: &Dictionary,
        gamma: f64,
    ) -> Result<Self> {
        Ok(SmoothMatcher {
            scorer: ContextScorer::new(corpus, model)?,
            literal: DictionaryMatcher::new(corpus, dict),
            gamma,
        })
    }

    pub fn find(&self, doc: &Document) -> Vec<SmoothMatch> {
        candidate_spans(&self.literal, doc)
            .into_iter()
            .filter_map(|(start, length)| {
                let p = self.scorer.score(doc, start, length);
                (p >= self.gamma).then(|| SmoothMatch {
                    ngram: NgramRef::new(&doc.id, start, length),
                    probability: p,
                })
            })
            .collect()
    }

    pub fn count(&self, doc: &Document) -> usize {
        candidate_spans(&self.literal, doc)
            .into_iter()
            .filter(|&(start, length)| self.scorer.score(doc, start, length) >= self.gamma)
            .count()
    }
}

pub fn smooth_matches(
    corpus: &Corpus,
    model: &ContextModel,
    dict: &Dictionary,
    doc_id: &str,
) -> Result<SmoothMatchList> {
    let doc = corpus.document(doc_id)?;
    let matcher = SmoothMatcher::new(corpus, model, dict)?;
    Ok(SmoothMatchList {
        dictionary_id: dict.id.clone(),
        doc_id: doc.id.clone(),
        matches: matcher.find(doc),
    })
}

/// Smoothed dictionary feature, `ln(1 + smooth match count)`.
pub fn smoothed_feature(smooth_match_count: usize) -> f64 {
    dict_feature(smooth_match_count)
}

/// Candidate probabilities of every document, in corpus order.
pub fn candidate_scores(
    corpus: &Corpus,
    model: &ContextModel,
    dict: &Dictionary,
) -> Result<Vec<Vec<f64>>> {
    check_pair(model, dict)?;
    let scorer = ContextScorer::new(corpus, model)?;
    let literal = DictionaryMatcher::new(corpus, dict);
    Ok(corpus
        .documents()
        .par_iter()
        .map(|doc| {
            candidate_spans(&literal, doc)
                .into_iter()
                .map(|(s, l)| scorer.score(doc, s, l))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub gamma: f64,
    pub target: f64,
    /// Mean smooth matches per document at `gamma`.
    pub achieved: f64,
    pub candidates: usize,
    /// True when the target asks for more matches than there are candidates.
    pub saturated: bool,
}

/// Picks the smallest score `gamma` such that the number of scores at or
/// above it stays within `target * documents`.
///
/// When every candidate fits the budget, `gamma` is the minimum score. When
/// even the top score is tied beyond the budget, `gamma` sits just above it
/// and nothing matches.
pub fn threshold_for_budget(scores: &[f64], documents: usize, target: f64) -> Result<Calibration> {
    if documents == 0 || scores.is_empty() {
        return Err(Error::Precondition("no candidates to calibrate on".into()));
    }
    if !target.is_finite() || target <= 0.0 {
        return Err(Error::InvalidArgument("target must be positive".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let docs = documents as f64;
    let budget = (target * docs * (1.0 + 1e-12)).floor() as usize;

    let saturated = budget >= n;
    let gamma = if saturated {
        sorted[n - 1]
    } else {
        // Largest k <= budget with a strict drop after position k - 1.
        match (1..=budget).rev().find(|&k| sorted[k - 1] > sorted[k]) {
            Some(k) => sorted[k - 1],
            None => sorted[0].next_up().min(1.0),
        }
    };
    // Gamma must stay positive even if some scores underflowed to zero.
    let gamma = gamma.max(f64::MIN_POSITIVE);
    let count = sorted.iter().take_while(|&&s| s >= gamma).count();
    Ok(Calibration {
        gamma,
        target,
        achieved: count as f64 / docs,
        candidates: n,
        saturated,
    })
}

/// Mean literal matches per document, the default calibration target.
pub fn mean_literal_matches(corpus: &Corpus, dict: &Dictionary) -> f64 {
    let matcher = DictionaryMatcher::new(corpus, dict);
    let total: usize = corpus.documents().par_iter().map(|d| matcher.count(d)).sum();
    total as f64 / corpus.len().max(1) as f64
}

/// Sets the threshold so that the corpus-wide mean number of smooth
/// matches per document meets `target` (default: the mean literal count).
pub fn calibrate_threshold(
    corpus: &Corpus,
    model: &ContextModel,
    dict: &Dictionary,
    target: Option<f64>,
) -> Result<Calibration> {
    if corpus.is_empty() {
        return Err(Error::Precondition("empty corpus".into()));
    }
    let target = match target {
        Some(t) => t,
        None => mean_literal_matches(corpus, dict),
    };
    let scores: Vec<f64> = candidate_scores(corpus, model, dict)?
        .into_iter()
        .flatten()
        .collect();
    threshold_for_budget(&scores, corpus.len(), target)
}

/// One row of a ranked context listing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRow {
    pub percentile: f64,
    pub probability: f64,
    pub before: String,
    pub term: String,
    pub after: String,
    pub doc_id: String,
    pub start: usize,
}

pub const CONTEXT_DISPLAY_TOKENS: usize = 8;

/// Occurrences of `term`, most dictionary-like context first.
///
/// Row `r` (0-based) of `n` occurrences carries percentile `100 r / n`;
/// ties in probability are broken by (doc id, position).
pub fn rank_contexts(
    corpus: &Corpus,
    model: &ContextModel,
    term: &[String],
    limit: usize,
) -> Result<Vec<ContextRow>> {
    if term.is_empty() {
        return Ok(Vec::new());
    }
    let scorer = ContextScorer::new(corpus, model)?;
    let hits = corpus.keyword_search(term)?;
    let mut scored: Vec<(f64, NgramRef)> = hits
        .into_iter()
        .map(|r| {
            let doc = corpus.document(&r.doc_id).expect("search hit");
            (scorer.score(doc, r.start, r.length), r)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let n = scored.len();
    Ok(scored
        .into_iter()
        .take(limit)
        .enumerate()
        .map(|(r, (p, ngram))| {
            let doc = corpus.document(&ngram.doc_id).expect("search hit");
            let lo = ngram.start.saturating_sub(CONTEXT_DISPLAY_TOKENS);
            let hi = (ngram.end() + CONTEXT_DISPLAY_TOKENS).min(doc.len());
            ContextRow {
                percentile: 100.0 * r as f64 / n as f64,
                probability: p,
                before: doc.tokens[lo..ngram.start].join(" "),
                term: doc.tokens[ngram.start..ngram.end()].join(" "),
                after: doc.tokens[ngram.end()..hi].join(" "),
                doc_id: ngram.doc_id,
                start: ngram.start,
            }
        })
        .collect())
}

/// Share of occurrences (in percent) that trigger at threshold `gamma`,
/// read off a ranked listing: the percentile of the last row whose
/// probability reaches `gamma`. `None` when no row triggers.
pub fn trigger_percentage(rows: &[ContextRow], gamma: f64) -> Option<f64> {
    rows.iter()
        .take_while(|r| r.probability >= gamma)
        .last()
        .map(|r| r.percentile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuggestConfig {
    pub max_ngram_len: usize,
    pub min_occurrences: usize,
    pub top_k: usize,
}

impl Default for SuggestConfig {
    fn default() -> Self {
        SuggestConfig {
            max_ngram_len: 1,
            min_occurrences: 3,
            top_k: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub ngram: Vec<String>,
    pub mean_probability: f64,
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionList {
    pub dictionary_id: String,
    pub entries: Vec<Suggestion>,
}

/// Ranks n-grams outside the dictionary by their mean membership
/// probability over all occurrences.
pub fn suggest_terms(
    corpus: &Corpus,
    model: &ContextModel,
    dict: &Dictionary,
    config: &SuggestConfig,
) -> Result<SuggestionList> {
    if config.max_ngram_len == 0 {
        return Err(Error::InvalidArgument("max_ngram_len must be at least 1".into()));
    }
    let scorer = ContextScorer::new(corpus, model)?;
    let per_doc: Vec<Vec<(&[u32], f64)>> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let ids = doc.token_ids();
            let mut out = Vec::new();
            for start in 0..ids.len() {
                for len in 1..=config.max_ngram_len.min(ids.len() - start) {
                    out.push((&ids[start..start + len], scorer.score(doc, start, len)));
                }
            }
            out
        })
        .collect();

    let mut totals: HashMap<&[u32], (f64, usize)> = HashMap::new();
    for (key, p) in per_doc.into_iter().flatten() {
        let e = totals.entry(key).or_default();
        e.0 += p;
        e.1 += 1;
    }

    let vocab = corpus.vocabulary();
    let mut entries: Vec<Suggestion> = totals
        .into_iter()
        .filter(|(_, (_, n))| *n >= config.min_occurrences)
        .map(|(key, (sum, n))| Suggestion {
            ngram: key.iter().map(|&t| vocab[t as usize].clone()).collect(),
            mean_probability: sum / n as f64,
            occurrences: n,
        })
        .filter(|s| !dict.contains(&s.ngram))
        .collect();
    entries.sort_by(|a, b| {
        b.mean_probability
            .total_cmp(&a.mean_probability)
            .then(b.occurrences.cmp(&a.occurrences))
            .then_with(|| a.ngram.cmp(&b.ngram))
    });
    entries.truncate(config.top_k);
    Ok(SuggestionList {
        dictionary_id: dict.id.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::context::window::extract_instance;
    use crate::corpus::Record;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_records(texts.iter().enumerate().map(|(i, t)| Record {
            id: format!("d{i}"),
            text: t.to_string(),
            label: None,
        }))
        .unwrap()
    }

    // "in" right before the target is evidence for the dictionary.
    fn model_for(dict_id: &str) -> ContextModel {
        let mut counts = vec![(BTreeMap::new(), BTreeMap::new()); WINDOW_COUNT];
        counts[0] = (
            [("in".to_string(), 8u64), ("the".to_string(), 1)].into(),
            [("in".to_string(), 1u64), ("the".to_string(), 8)].into(),
        );
        let mut theta = vec![0.0; 11];
        theta[0] = -1.0;
        theta[1] = 1.5;
        ContextModel::from_counts(dict_id, &counts, 1.0, theta).unwrap()
    }

    #[test]
    fn scorer_matches_instance_prediction_bitwise() {
        let c = corpus(&["the cat sat in may and in june the end", "in new york in may"]);
        let m = model_for("m");
        let scorer = ContextScorer::new(&c, &m).unwrap();
        for doc in c.documents() {
            for len in 1..3 {
                for start in 0..=doc.len() - len {
                    let inst = extract_instance(&c, &NgramRef::new(&doc.id, start, len)).unwrap();
                    assert_eq!(
                        scorer.score(doc, start, len).to_bits(),
                        m.predict(&inst).unwrap().to_bits()
                    );
                }
            }
        }
    }

    #[test]
    fn threshold_extremes() {
        let c = corpus(&["the cat sat in may", "in new york in may"]);
        let m = model_for("m");
        let d = Dictionary::from_phrases("m", "m", &["may", "new york"]);
        let all = smooth_matches(&c, &m, &d.clone().with_gamma(1e-12), "d1").unwrap();
        // Five unigrams plus the literal bigram.
        assert_eq!(all.count(), 6);
        assert!(all.matches.iter().any(|s| s.ngram.length == 2));
        let none = smooth_matches(&c, &m, &d.clone().with_gamma(1.0), "d1").unwrap();
        assert_eq!(none.count(), 0);
        assert!(matches!(
            smooth_matches(&c, &m, &d, "d1"),
            Err(Error::Uncalibrated(_))
        ));
        let other = Dictionary::from_phrases("x", "x", &["may"]).with_gamma(0.5);
        assert!(smooth_matches(&c, &m, &other, "d0").is_err());
    }

    #[test]
    fn raising_gamma_never_adds_matches() {
        let c = corpus(&["the cat sat in may", "in new york in may the in the in"]);
        let m = model_for("m");
        let d = Dictionary::from_phrases("m", "m", &["may"]);
        let gammas = [0.01, 0.1, 0.2, 0.3, 0.5, 0.6, 0.7, 0.9];
        for doc in c.documents() {
            let counts: Vec<usize> = gammas
                .iter()
                .map(|&g| SmoothMatcher::with_gamma(&c, &m, &d, g).unwrap().count(doc))
                .collect();
            assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
        }
    }

    #[test]
    fn smoothed_feature_values() {
        assert_eq!(smoothed_feature(0), 0.0);
        assert!((smoothed_feature(1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((smoothed_feature(7) - 2.0794415416798357).abs() < 1e-12);
    }

    #[test]
    fn budget_threshold() {
        let cal = threshold_for_budget(&[0.9, 0.8, 0.1, 0.05], 2, 1.0).unwrap();
        assert_eq!(cal.gamma, 0.8);
        assert_eq!(cal.achieved, 1.0);
        assert!(!cal.saturated);

        let cal = threshold_for_budget(&[0.9, 0.8, 0.1, 0.05], 2, 2.0).unwrap();
        assert_eq!(cal.gamma, 0.05);
        assert!(cal.saturated);

        // Ties straddling the budget push the threshold above them.
        let cal = threshold_for_budget(&[0.9, 0.5, 0.5, 0.1], 2, 1.0).unwrap();
        assert_eq!(cal.gamma, 0.9);
        assert_eq!(cal.achieved, 0.5);

        let cal = threshold_for_budget(&[0.5, 0.5, 0.5], 1, 1.0).unwrap();
        assert!(cal.gamma > 0.5);
        assert_eq!(cal.achieved, 0.0);

        assert!(threshold_for_budget(&[], 1, 1.0).is_err());
        assert!(threshold_for_budget(&[0.5], 1, 0.0).is_err());
    }

    #[test]
    fn budget_threshold_matches_brute_force() {
        // Brute force: try every distinct score as a threshold and keep the
        // smallest one whose match count fits.
        let scores: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64) / 101.0 + 0.001).collect();
        for target in [0.5, 1.0, 3.0, 7.5, 19.0] {
            let docs = 10;
            let cal = threshold_for_budget(&scores, docs, target).unwrap();
            let mut candidates: Vec<f64> = scores.clone();
            candidates.sort_by(f64::total_cmp);
            candidates.dedup();
            let best = candidates
                .iter()
                .copied()
                .find(|&g| scores.iter().filter(|&&s| s >= g).count() as f64 <= target * docs as f64);
            assert_eq!(Some(cal.gamma), best, "target {target}");
        }
    }

    #[test]
    fn ranked_rows() {
        let c = corpus(&["in may we go", "the may be", "in may", "x may"]);
        let m = model_for("m");
        let rows = rank_contexts(&c, &m, &["may".to_string()], 10).unwrap();
        assert_eq!(rows.len(), 4);
        let pct: Vec<f64> = rows.iter().map(|r| r.percentile).collect();
        assert_eq!(pct, [0.0, 25.0, 50.0, 75.0]);
        // Two "in may" rows tie; doc id order decides.
        assert_eq!(rows[0].doc_id, "d0");
        assert_eq!(rows[1].doc_id, "d2");
        assert_eq!(rows[0].before, "in");
        assert_eq!(rows[0].after, "we go");
        assert!(rows.windows(2).all(|w| w[0].probability >= w[1].probability));
        assert!(rank_contexts(&c, &m, &["zebra".to_string()], 10).unwrap().is_empty());
        assert_eq!(rank_contexts(&c, &m, &["may".to_string()], 2).unwrap().len(), 2);
    }

    #[test]
    fn suggestions_exclude_dictionary_terms() {
        let c = corpus(&[
            "in may in june in july the cat the dog",
            "in june in july the cat in may",
            "in july the dog in june",
        ]);
        let m = model_for("m");
        let d = Dictionary::from_phrases("m", "m", &["may"]);
        let list = suggest_terms(&c, &m, &d, &SuggestConfig::default()).unwrap();
        assert!(list.entries.iter().all(|s| s.ngram != ["may"]));
        let top: Vec<&str> = list.entries[..2].iter().map(|s| s.ngram[0].as_str()).collect();
        assert!(top.contains(&"june") && top.contains(&"july"), "{list:?}");

        let none = suggest_terms(
            &c,
            &m,
            &d,
            &SuggestConfig {
                min_occurrences: 100,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(none.entries.is_empty());
    }
}
