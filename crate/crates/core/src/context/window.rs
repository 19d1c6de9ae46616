use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, NgramRef};
use crate::error::Result;

pub const WINDOW_COUNT: usize = 10;
const SIZES: [usize; 5] = [1, 2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Before,
    After,
}

/// One of the ten context windows around a target span.
///
/// A window of size `s` covers token distances `[s, 2s)` from the span:
/// counted back from its first token on the before side, forward from its
/// last token on the after side. The sizes 1, 2, 4, 8, 16 tile distances
/// 1..32 on each side without overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub side: Side,
    pub size: usize,
}

impl WindowSpec {
    /// Index order: before windows by increasing size, then after windows.
    pub fn all() -> [WindowSpec; WINDOW_COUNT] {
        std::array::from_fn(|i| WindowSpec {
            side: if i < 5 { Side::Before } else { Side::After },
            size: SIZES[i % 5],
        })
    }

    pub fn distances(&self) -> Range<usize> {
        self.size..2 * self.size
    }

    /// Token positions covered in a document of `len` tokens, truncated at
    /// the document edges.
    pub fn positions(&self, start: usize, length: usize, len: usize) -> Range<usize> {
        let Range { start: near, end: far } = self.distances();
        match self.side {
            Side::Before => start.saturating_sub(far - 1)..(start + 1).saturating_sub(near),
            Side::After => {
                let last = start + length - 1;
                (last + near).min(len)..(last + far).min(len)
            }
        }
    }
}

/// Window position ranges for a span, in [`WindowSpec::all`] order.
pub(crate) fn window_ranges(start: usize, length: usize, len: usize) -> [Range<usize>; WINDOW_COUNT] {
    let specs = WindowSpec::all();
    std::array::from_fn(|i| specs[i].positions(start, length, len))
}

/// The unigram sets of the ten windows around one n-gram occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextInstance {
    pub ngram: NgramRef,
    /// Sorted, deduplicated unigrams per window.
    pub windows: [Vec<String>; WINDOW_COUNT],
    /// `Some(true)` for an in-dictionary training instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inside: Option<bool>,
}

pub fn extract_instance(corpus: &Corpus, ngram: &NgramRef) -> Result<ContextInstance> {
    corpus.ngram_at(ngram)?;
    let doc = corpus.document(&ngram.doc_id)?;
    Ok(instance_from_doc(doc, ngram.start, ngram.length, None))
}

pub(crate) fn instance_from_doc(
    doc: &Document,
    start: usize,
    length: usize,
    inside: Option<bool>,
) -> ContextInstance {
    let ranges = window_ranges(start, length, doc.len());
    let windows = ranges.map(|r| {
        let mut set: Vec<String> = doc.tokens[r].to_vec();
        set.sort_unstable();
        set.dedup();
        set
    });
    ContextInstance {
        ngram: NgramRef::new(&doc.id, start, length),
        windows,
        inside,
    }
}
