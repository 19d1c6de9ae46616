use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    /// Predicted score closest to 0.5 first.
    Uncertainty,
    /// Largest gap between the current model and the bag-of-words baseline.
    Disagreement,
    Keyword { query: String },
}

impl Strategy {
    /// Parses `uncertainty`, `disagreement` or `keyword`; the latter needs
    /// a query.
    pub fn parse(name: &str, query: Option<&str>) -> Result<Self> {
        match (name, query) {
            ("uncertainty", _) => Ok(Strategy::Uncertainty),
            ("disagreement", _) => Ok(Strategy::Disagreement),
            ("keyword", Some(q)) if !q.trim().is_empty() => Ok(Strategy::Keyword { query: q.to_string() }),
            ("keyword", _) => Err(Error::InvalidArgument("keyword sampling needs a query".into())),
            _ => Err(Error::InvalidArgument(format!("unknown strategy {name:?}"))),
        }
    }
}

fn rank_by<K: Fn(f64) -> f64>(mut rows: Vec<(String, f64)>, key: K, count: usize) -> Vec<String> {
    rows.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)).then_with(|| a.0.cmp(&b.0)));
    rows.into_iter().take(count).map(|r| r.0).collect()
}

/// Orders `(doc id, score)` pairs by `|score - 0.5|`, ties by doc id.
pub fn rank_uncertainty(rows: Vec<(String, f64)>, count: usize) -> Vec<String> {
    rank_by(rows, |s| (s - 0.5).abs(), count)
}

/// Orders `(doc id, current, baseline)` by `|current - baseline|`
/// descending, ties by doc id.
pub fn rank_disagreement(rows: Vec<(String, f64, f64)>, count: usize) -> Vec<String> {
    let gaps = rows.into_iter().map(|(id, a, b)| (id, (a - b).abs())).collect();
    rank_by(gaps, |g| -g, count)
}
