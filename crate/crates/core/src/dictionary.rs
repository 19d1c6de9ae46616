//! Teacher-authored dictionaries and literal matching.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus, Document};
use crate::error::{Error, Result};

/// A named set of n-gram terms standing for one concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub id: String,
    pub name: String,
    pub terms: Vec<Vec<String>>,
    /// Smooth-match threshold, set by calibration or by the teacher.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Dictionary {
    /// Builds a dictionary from free-text phrases, tokenizing each one.
    pub fn from_phrases<S: AsRef<str>>(
        id: impl Into<String>,
        name: impl Into<String>,
        phrases: &[S],
    ) -> Self {
        Dictionary {
            id: id.into(),
            name: name.into(),
            terms: phrases.iter().map(|p| tokenize(p.as_ref())).collect(),
            gamma: None,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn contains(&self, term: &[String]) -> bool {
        self.terms.iter().any(|t| t == term)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        if self.id.is_empty() {
            findings.push(Finding::new(None, FindingKind::EmptyId));
        }
        if self.terms.is_empty() {
            findings.push(Finding::new(None, FindingKind::NoTerms));
        }
        let mut seen = HashSet::new();
        for (i, term) in self.terms.iter().enumerate() {
            if term.is_empty() {
                findings.push(Finding::new(Some(i), FindingKind::EmptyTerm));
                continue;
            }
            if tokenize(&term.join(" ")) != *term {
                findings.push(Finding::new(Some(i), FindingKind::NonCanonical));
            }
            if !seen.insert(term) {
                findings.push(Finding::new(Some(i), FindingKind::DuplicateTerm));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                findings.push(Finding::new(None, FindingKind::GammaOutOfRange));
            }
        }
        ValidationReport { findings }
    }

    /// Fails with the first validation finding, if any.
    pub fn ensure_valid(&self) -> Result<()> {
        match self.validate().findings.first() {
            None => Ok(()),
            Some(f) => Err(Error::InvalidDictionary {
                id: self.id.clone(),
                reason: f.message.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    EmptyId,
    NoTerms,
    EmptyTerm,
    DuplicateTerm,
    NonCanonical,
    GammaOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub term_index: Option<usize>,
    pub kind: FindingKind,
    pub message: String,
}

impl Finding {
    fn new(term_index: Option<usize>, kind: FindingKind) -> Self {
        let what = match kind {
            FindingKind::EmptyId => "dictionary id is empty",
            FindingKind::NoTerms => "dictionary must be nonempty",
            FindingKind::EmptyTerm => "empty term",
            FindingKind::DuplicateTerm => "duplicate term",
            FindingKind::NonCanonical => "term not in canonical token form",
            FindingKind::GammaOutOfRange => "gamma must lie in (0, 1]",
        };
        let message = match term_index {
            Some(i) => format!("term {i}: {what}"),
            None => what.to_string(),
        };
        Finding {
            term_index,
            kind,
            message,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has(&self, kind: FindingKind) -> bool {
        self.findings.iter().any(|f| f.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Match {
    pub start: usize,
    pub length: usize,
    /// Index into the dictionary's term list.
    pub term: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchList {
    pub dictionary_id: String,
    pub doc_id: String,
    pub matches: Vec<Match>,
}

impl MatchList {
    pub fn count(&self) -> usize {
        self.matches.len()
    }
}

#[derive(Debug, Default)]
struct TrieNode {
    children: HashMap<u32, usize>,
    term: Option<usize>,
}

/// Token-level trie over a dictionary's terms, keyed by a corpus's
/// interned token ids. Terms using tokens the corpus never saw are dropped
/// since they cannot match.
#[derive(Debug)]
pub struct DictionaryMatcher {
    nodes: Vec<TrieNode>,
}

impl DictionaryMatcher {
    pub fn new(corpus: &Corpus, dict: &Dictionary) -> Self {
        let mut nodes = vec![TrieNode::default()];
        'terms: for (index, term) in dict.terms.iter().enumerate() {
            if term.is_empty() {
                continue;
            }
            let mut ids = Vec::with_capacity(term.len());
            for token in term {
                match corpus.token_id(token) {
                    Some(id) => ids.push(id),
                    None => continue 'terms,
                }
            }
            let mut node = 0;
            for id in ids {
                node = match nodes[node].children.get(&id) {
                    Some(&next) => next,
                    None => {
                        nodes.push(TrieNode::default());
                        let next = nodes.len() - 1;
                        nodes[node].children.insert(id, next);
                        next
                    }
                };
            }
            // Duplicate terms keep the first index; the span counts once.
            nodes[node].term.get_or_insert(index);
        }
        DictionaryMatcher { nodes }
    }

    /// All term occurrences, ordered by (start, length).
    pub fn find(&self, doc: &Document) -> Vec<Match> {
        let ids = doc.token_ids();
        let mut out = Vec::new();
        for start in 0..ids.len() {
            let mut node = 0;
            for (offset, id) in ids[start..].iter().enumerate() {
                match self.nodes[node].children.get(id) {
                    Some(&next) => node = next,
                    None => break,
                }
                if let Some(term) = self.nodes[node].term {
                    out.push(Match {
                        start,
                        length: offset + 1,
                        term,
                    });
                }
            }
        }
        out
    }

    pub fn count(&self, doc: &Document) -> usize {
        self.find(doc).len()
    }
}

pub fn literal_matches(corpus: &Corpus, dict: &Dictionary, doc_id: &str) -> Result<MatchList> {
    let doc = corpus.document(doc_id)?;
    Ok(MatchList {
        dictionary_id: dict.id.clone(),
        doc_id: doc.id.clone(),
        matches: DictionaryMatcher::new(corpus, dict).find(doc),
    })
}

/// Literal dictionary feature, `ln(1 + count)`.
pub fn dict_feature(match_count: usize) -> f64 {
    (match_count as f64).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Record;

    pub(crate) const MONTHS: [&str; 12] = [
        "january",
        "february",
        "march",
        "april",
        "may",
        "june",
        "july",
        "august",
        "september",
        "october",
        "november",
        "december",
    ];

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_records(texts.iter().enumerate().map(|(i, t)| Record {
            id: format!("d{i}"),
            text: t.to_string(),
            label: None,
        }))
        .unwrap()
    }

    #[test]
    fn month_dictionary_matches_modal_may() {
        let c = corpus(&["May I help you"]);
        let months = Dictionary::from_phrases("month", "months", &MONTHS);
        let list = literal_matches(&c, &months, "d0").unwrap();
        assert_eq!(
            list.matches,
            [Match {
                start: 0,
                length: 1,
                term: 4
            }]
        );
    }

    #[test]
    fn overlapping_terms_both_reported() {
        let c = corpus(&["may i help you"]);
        let d = Dictionary::from_phrases("d", "d", &["help you", "help"]);
        let spans: Vec<_> = literal_matches(&c, &d, "d0")
            .unwrap()
            .matches
            .iter()
            .map(|m| (m.start, m.length))
            .collect();
        assert_eq!(spans, [(2, 1), (2, 2)]);
    }

    #[test]
    fn duplicate_terms_count_once() {
        let c = corpus(&["a b a"]);
        let d = Dictionary {
            id: "d".into(),
            name: "d".into(),
            terms: vec![vec!["a".into()], vec!["a".into()]],
            gamma: None,
        };
        assert_eq!(literal_matches(&c, &d, "d0").unwrap().count(), 2);
    }

    #[test]
    fn unknown_doc_is_an_error() {
        let c = corpus(&["x"]);
        let d = Dictionary::from_phrases("d", "d", &["x"]);
        assert!(matches!(
            literal_matches(&c, &d, "nope"),
            Err(Error::UnknownDocument(_))
        ));
    }

    #[test]
    fn feature_values() {
        assert_eq!(dict_feature(0), 0.0);
        assert!((dict_feature(1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((dict_feature(3) - 4f64.ln()).abs() < 1e-15);
        for n in 0..100 {
            assert!(dict_feature(n + 1) > dict_feature(n));
        }
    }

    #[test]
    fn validation_findings() {
        let months = Dictionary::from_phrases("month", "months", &MONTHS);
        assert!(months.validate().is_empty());

        let mut bad = months.clone();
        bad.terms[4] = vec!["May".into()];
        assert!(bad.validate().has(FindingKind::NonCanonical));
        assert_eq!(
            bad.validate().findings[0].message,
            "term 4: term not in canonical token form"
        );

        let mut dup = months.clone();
        dup.terms.push(vec!["may".into()]);
        assert!(dup.validate().has(FindingKind::DuplicateTerm));

        let mut joined = months.clone();
        joined.terms.push(vec!["new york".into()]);
        assert!(joined.validate().has(FindingKind::NonCanonical));

        let empty = Dictionary::from_phrases::<&str>("e", "e", &[]);
        assert!(empty.validate().has(FindingKind::NoTerms));
        assert!(empty.ensure_valid().is_err());

        assert!(months.clone().with_gamma(0.0).validate().has(FindingKind::GammaOutOfRange));
        assert!(months.with_gamma(1.0).validate().is_empty());
    }
}
