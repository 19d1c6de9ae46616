//! Documents, tokenization and the keyword index.

use std::collections::HashMap;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary teacher label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Negative => 0.0,
            Label::Positive => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        match label {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, String> {
        match value {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<bool> for Label {
    fn from(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// Splits text into lowercase tokens.
///
/// Maximal runs of alphanumeric characters form one token; every other
/// non-whitespace character is a token of its own; whitespace separates.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.push(lower(c));
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(lower(c).to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

// Single-character lowercase mapping; the only multi-char full mapping
// (U+0130) keeps its leading 'i'.
fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// One input line of the corpus JSONL format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    /// Ground-truth label carried by the input, if any.
    pub label: Option<Label>,
    token_ids: Vec<u32>,
}

impl Document {
    /// Corpus-level interned ids, parallel to `tokens`.
    pub fn token_ids(&self) -> &[u32] {
        &self.token_ids
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A contiguous token span inside one document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NgramRef {
    pub doc_id: String,
    pub start: usize,
    pub length: usize,
}

impl NgramRef {
    pub fn new(doc_id: impl Into<String>, start: usize, length: usize) -> Self {
        NgramRef {
            doc_id: doc_id.into(),
            start,
            length,
        }
    }

    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

/// An immutable, tokenized document collection with an inverted index.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    by_id: HashMap<String, usize>,
    vocab: Vec<String>,
    token_ids: HashMap<String, u32>,
    /// token id -> (doc index, position), sorted by (doc id, position).
    postings: Vec<Vec<(u32, u32)>>,
}

impl Corpus {
    pub fn from_records(records: impl IntoIterator<Item = Record>) -> Result<Self> {
        let records: Vec<Record> = records.into_iter().collect();
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateDocument(r.id.clone()));
            }
        }

        let tokenized: Vec<Vec<String>> = records.par_iter().map(|r| tokenize(&r.text)).collect();

        let mut vocab = Vec::new();
        let mut token_ids: HashMap<String, u32> = HashMap::new();
        let mut documents = Vec::with_capacity(records.len());
        for (record, tokens) in records.into_iter().zip(tokenized) {
            let ids = tokens
                .iter()
                .map(|t| match token_ids.get(t) {
                    Some(&id) => id,
                    None => {
                        let id = vocab.len() as u32;
                        vocab.push(t.clone());
                        token_ids.insert(t.clone(), id);
                        id
                    }
                })
                .collect();
            documents.push(Document {
                id: record.id,
                text: record.text,
                tokens,
                label: record.label,
                token_ids: ids,
            });
        }

        // Visiting documents in id order yields postings already sorted.
        let mut order: Vec<usize> = (0..documents.len()).collect();
        order.sort_by(|&a, &b| documents[a].id.cmp(&documents[b].id));
        let mut postings = vec![Vec::new(); vocab.len()];
        for &d in &order {
            for (pos, &t) in documents[d].token_ids.iter().enumerate() {
                postings[t as usize].push((d as u32, pos as u32));
            }
        }

        Ok(Corpus {
            documents,
            by_id,
            vocab,
            token_ids,
            postings,
        })
    }

    /// Reads the JSONL corpus format, one record per line. Blank lines are
    /// skipped; line numbers in errors are 1-based.
    pub fn ingest<R: BufRead>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record =
                serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            records.push(record);
        }
        Self::from_records(records)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, id: &str) -> Result<&Document> {
        self.doc_index(id).map(|i| &self.documents[i])
    }

    pub fn doc_index(&self, id: &str) -> Result<usize> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownDocument(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    /// Distinct tokens in first-seen order; index = interned id.
    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.token_ids.get(token).copied()
    }

    /// Index entries for one token as (doc id, position), sorted.
    pub fn postings(&self, token: &str) -> Vec<(&str, usize)> {
        self.token_id(token)
            .map(|t| {
                self.postings[t as usize]
                    .iter()
                    .map(|&(d, p)| (self.documents[d as usize].id.as_str(), p as usize))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Total number of index entries.
    pub fn index_len(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }

    /// Every contiguous occurrence of `query`, ordered by (doc id, start).
    pub fn keyword_search(&self, query: &[String]) -> Result<Vec<NgramRef>> {
        let (first, rest) = query
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("empty query".into()))?;
        let Some(first_id) = self.token_id(first) else {
            return Ok(Vec::new());
        };
        let Some(rest_ids) = rest
            .iter()
            .map(|t| self.token_id(t))
            .collect::<Option<Vec<u32>>>()
        else {
            return Ok(Vec::new());
        };

        let hits = self.postings[first_id as usize]
            .iter()
            .filter_map(|&(d, p)| {
                let doc = &self.documents[d as usize];
                let start = p as usize + 1;
                let tail = doc.token_ids.get(start..start + rest_ids.len())?;
                (tail == rest_ids.as_slice()).then(|| NgramRef::new(&doc.id, p as usize, query.len()))
            })
            .collect();
        Ok(hits)
    }

    pub fn ngram_at(&self, ngram: &NgramRef) -> Result<&[String]> {
        let doc = self.document(&ngram.doc_id)?;
        if ngram.length == 0 || ngram.end() > doc.len() {
            return Err(Error::OutOfRange {
                doc_id: ngram.doc_id.clone(),
                start: ngram.start,
                length: ngram.length,
                token_count: doc.len(),
            });
        }
        Ok(&doc.tokens[ngram.start..ngram.end()])
    }

    /// Documents carrying a ground-truth label.
    pub fn labeled(&self) -> impl Iterator<Item = (&Document, Label)> {
        self.documents
            .iter()
            .filter_map(|d| d.label.map(|l| (d, l)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    fn one_doc(text: &str) -> Corpus {
        Corpus::from_records([Record {
            id: "d".into(),
            text: text.into(),
            label: None,
        }])
        .unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("May I help you"), toks(&["may", "i", "help", "you"]));
        assert_eq!(
            tokenize("on 24 may , 1323"),
            toks(&["on", "24", "may", ",", "1323"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("it's 3.5%!"), toks(&["it", "'", "s", "3", ".", "5", "%", "!"]));
        assert_eq!(tokenize("Ünïcode  ÉTÉ\tx"), toks(&["ünïcode", "été", "x"]));
    }

    #[test]
    fn ingest_rejects_duplicates_and_bad_lines() {
        let input = "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d1\",\"text\":\"b\"}\n";
        match Corpus::ingest(input.as_bytes()) {
            Err(Error::DuplicateDocument(id)) => assert_eq!(id, "d1"),
            other => panic!("unexpected {other:?}"),
        }

        let input = "{\"id\":\"d1\",\"text\":\"a\"}\n\n{\"id\":\"d2\"}\n";
        match Corpus::ingest(input.as_bytes()) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }

        let input = "{\"id\":\"d1\",\"text\":\"a\",\"label\":2}\n";
        assert!(matches!(
            Corpus::ingest(input.as_bytes()),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn ingest_two_records() {
        let input = "{\"id\":\"d1\",\"text\":\"May I help you\",\"label\":1}\n{\"id\":\"d2\",\"text\":\"help me\"}\n";
        let corpus = Corpus::ingest(input.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.document("d1").unwrap().label, Some(Label::Positive));
        assert_eq!(corpus.postings("help"), vec![("d1", 2), ("d2", 0)]);
        assert_eq!(corpus.postings("me"), vec![("d2", 1)]);
        assert_eq!(corpus.index_len(), corpus.token_count());
    }

    #[test]
    fn search_and_ngram_at() {
        let corpus = one_doc("may i help you");
        assert_eq!(
            corpus.keyword_search(&toks(&["may"])).unwrap(),
            vec![NgramRef::new("d", 0, 1)]
        );
        assert_eq!(
            corpus.keyword_search(&toks(&["help", "you"])).unwrap(),
            vec![NgramRef::new("d", 2, 2)]
        );
        assert!(corpus.keyword_search(&toks(&["you", "may"])).unwrap().is_empty());
        assert!(corpus.keyword_search(&[]).is_err());

        assert_eq!(corpus.ngram_at(&NgramRef::new("d", 0, 1)).unwrap(), ["may"]);
        assert_eq!(
            corpus.ngram_at(&NgramRef::new("d", 2, 2)).unwrap(),
            ["help", "you"]
        );
        assert!(matches!(
            corpus.ngram_at(&NgramRef::new("d", 3, 2)),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            corpus.ngram_at(&NgramRef::new("x", 0, 1)),
            Err(Error::UnknownDocument(_))
        ));
    }

    #[test]
    fn search_orders_by_doc_id() {
        let corpus = Corpus::from_records(
            ["b", "a", "c"].map(|id| Record {
                id: id.into(),
                text: "x y x".into(),
                label: None,
            }),
        )
        .unwrap();
        let hits = corpus.keyword_search(&toks(&["x"])).unwrap();
        let got: Vec<_> = hits.iter().map(|r| (r.doc_id.as_str(), r.start)).collect();
        assert_eq!(got, [("a", 0), ("a", 2), ("b", 0), ("b", 2), ("c", 0), ("c", 2)]);
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,60}") {
            let tokens = tokenize(&text);
            prop_assert_eq!(tokenize(&tokens.join(" ")), tokens.clone());
            prop_assert!(tokens.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        }

        #[test]
        fn search_round_trips(texts in proptest::collection::vec("[abc ,.]{0,30}", 1..6), qlen in 1usize..3) {
            let corpus = Corpus::from_records(texts.iter().enumerate().map(|(i, t)| Record {
                id: format!("d{i}"), text: t.clone(), label: None,
            })).unwrap();
            prop_assert_eq!(corpus.index_len(), corpus.token_count());
            for doc in corpus.documents() {
                if doc.len() < qlen { continue; }
                let query = doc.tokens[..qlen].to_vec();
                let hits = corpus.keyword_search(&query).unwrap();
                prop_assert!(hits.contains(&NgramRef::new(&doc.id, 0, qlen)));
                for hit in &hits {
                    prop_assert_eq!(corpus.ngram_at(hit).unwrap(), query.as_slice());
                }
            }
        }
    }
}
