//! Seeded generators for test corpora.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semfeat_core::context::ContextInstance;
use semfeat_core::{Corpus, Dictionary, Label, NgramRef, Record};

pub const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

/// Neutral words shared by every class.
const FILLER: [&str; 96] = [
    "the", "a", "of", "and", "to", "at", "report", "people", "water", "city", "road", "house",
    "music", "paper", "garden", "window", "river", "light", "stone", "table", "voice", "field",
    "train", "market", "school", "doctor", "friend", "family", "story", "picture", "letter",
    "money", "office", "station", "bridge", "forest", "island", "engine", "kitchen", "village",
    "small", "large", "green", "quiet", "bright", "heavy", "simple", "strange", "local", "public",
    "open", "warm", "cold", "old", "new", "long", "short", "fresh", "busy", "clear", "with", "for",
    "over", "under", "near", "about", "after", "around", "between", "across", "walked", "found",
    "built", "painted", "opened", "carried", "watched", "cleaned", "moved", "fixed", "sold",
    "bought", "wrote", "read", "many", "few", "some", "every", "other", "another", "such", "most",
    "often", "rarely", "slowly", "again",
];

const DATE_BEFORE: [&str; 10] = [
    "in", "since", "until", "during", "before", "early", "late", "mid", "from", "through",
];
const DATE_AFTER: [&str; 6] = ["2008", "1999", "2011", "1987", "2015", "2020"];

const MODALS: [&str; 7] = ["might", "can", "could", "should", "will", "would", "must"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick<'a, R: Rng>(rng: &mut R, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("nonempty word list")
}

fn filler<R: Rng>(rng: &mut R, out: &mut Vec<String>, n: usize) {
    out.extend((0..n).map(|_| pick(rng, &FILLER).to_string()));
}

/// A calendar mention: "early may 2008", "until june 1999" and the like.
fn date_phrase<R: Rng>(rng: &mut R, month: &str, out: &mut Vec<String>) {
    out.push(pick(rng, &DATE_BEFORE).into());
    out.push(month.into());
    out.push(pick(rng, &DATE_AFTER).into());
}

/// A modal verb inside ordinary prose: "the old station may open".
fn modal_phrase<R: Rng>(rng: &mut R, modal: &str, out: &mut Vec<String>) {
    filler(rng, out, 2);
    out.push(modal.into());
    filler(rng, out, 2);
}

#[derive(Debug, Clone)]
pub struct HomonymConfig {
    pub docs: usize,
    pub seed: u64,
    /// Calendar mentions per positive document, inclusive range.
    pub dates: (usize, usize),
    /// Modal "may" clauses per negative document.
    pub modal_may: (usize, usize),
    /// Clauses with other modal verbs, in every document.
    pub other_modals: (usize, usize),
    /// Filler words between phrases.
    pub gap: (usize, usize),
}

impl Default for HomonymConfig {
    fn default() -> Self {
        HomonymConfig {
            docs: 2000,
            seed: 1,
            dates: (1, 3),
            modal_may: (1, 3),
            other_modals: (0, 3),
            gap: (8, 20),
        }
    }
}

/// Balanced two-class corpus around the homonym "may".
///
/// Positives (even ids) carry calendar mentions of months drawn uniformly;
/// negatives (odd ids) carry "may" as a modal verb in plain prose. Both
/// classes use other modal verbs the same way. The month counts of the two
/// classes follow the same distribution, so a literal month count cannot
/// tell them apart.
pub fn homonym_corpus(config: &HomonymConfig) -> Vec<Record> {
    let mut rng = rng(config.seed);
    (0..config.docs)
        .map(|i| {
            let positive = i % 2 == 0;
            let mut phrases: Vec<Vec<String>> = Vec::new();
            if positive {
                let n = rng.gen_range(config.dates.0..=config.dates.1);
                for _ in 0..n {
                    let mut p = Vec::new();
                    let month = pick(&mut rng, &MONTHS);
                    date_phrase(&mut rng, month, &mut p);
                    phrases.push(p);
                }
            } else {
                let n = rng.gen_range(config.modal_may.0..=config.modal_may.1);
                for _ in 0..n {
                    let mut p = Vec::new();
                    modal_phrase(&mut rng, "may", &mut p);
                    phrases.push(p);
                }
            }
            let n = rng.gen_range(config.other_modals.0..=config.other_modals.1);
            for _ in 0..n {
                let mut p = Vec::new();
                let modal = pick(&mut rng, &MODALS);
                modal_phrase(&mut rng, modal, &mut p);
                phrases.push(p);
            }
            phrases.shuffle(&mut rng);
            let mut tokens = Vec::new();
            for p in phrases {
                let n = rng.gen_range(config.gap.0..=config.gap.1);
                filler(&mut rng, &mut tokens, n);
                tokens.extend(p);
            }
            let n = rng.gen_range(config.gap.0..=config.gap.1);
            filler(&mut rng, &mut tokens, n);
            Record {
                id: format!("doc{i:05}"),
                text: tokens.join(" "),
                label: Some(Label::from(positive)),
            }
        })
        .collect()
}

/// Unlabeled text where months only ever appear in calendar mentions.
pub fn calendar_corpus(docs: usize, seed: u64) -> Vec<Record> {
    let mut rng = rng(seed);
    (0..docs)
        .map(|i| {
            let mut tokens = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let n = rng.gen_range(3..=8);
                filler(&mut rng, &mut tokens, n);
                let month = pick(&mut rng, &MONTHS);
                date_phrase(&mut rng, month, &mut tokens);
            }
            let n = rng.gen_range(3..=8);
            filler(&mut rng, &mut tokens, n);
            Record {
                id: format!("cal{i:05}"),
                text: tokens.join(" "),
                label: None,
            }
        })
        .collect()
}

pub fn month_dictionary() -> Dictionary {
    Dictionary::from_phrases("months", "months", &MONTHS)
}

/// A small-vocabulary random corpus; token `w3` is the fourth vocabulary
/// word. Repetitive on purpose, so that n-gram terms actually occur.
pub fn random_corpus<R: Rng>(rng: &mut R, docs: usize, max_len: usize, vocab: usize) -> Corpus {
    Corpus::from_records((0..docs).map(|i| {
        let len = rng.gen_range(0..=max_len);
        let text: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
        Record {
            id: format!("r{i}"),
            text: text.join(" "),
            label: None,
        }
    }))
    .expect("unique ids")
}

/// Random dictionary over the same vocabulary. Terms are distinct; some
/// may mention words absent from the corpus.
pub fn random_dictionary<R: Rng>(rng: &mut R, terms: usize, max_len: usize, vocab: usize) -> Dictionary {
    let mut out: Vec<Vec<String>> = Vec::new();
    while out.len() < terms {
        let len = rng.gen_range(1..=max_len);
        let term: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab + 2))).collect();
        if !out.contains(&term) {
            out.push(term);
        }
    }
    Dictionary {
        id: "rand".into(),
        name: "random".into(),
        terms: out,
        gamma: None,
    }
}

/// Labeled context instances with random window contents (sorted and
/// deduplicated, as extraction produces them). Both classes are present.
pub fn random_instances<R: Rng>(rng: &mut R, n: usize, vocab: usize) -> Vec<ContextInstance> {
    (0..n.max(2))
        .map(|i| {
            let windows = std::array::from_fn(|_| {
                let len = rng.gen_range(0..=6);
                let mut w: Vec<String> = (0..len).map(|_| format!("t{}", rng.gen_range(0..vocab))).collect();
                w.sort();
                w.dedup();
                w
            });
            let inside = if i < 2 { i == 0 } else { rng.gen_bool(0.3) };
            ContextInstance {
                ngram: NgramRef::new(format!("x{i}"), 0, 1),
                windows,
                inside: Some(inside),
            }
        })
        .collect()
}
