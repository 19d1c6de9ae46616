use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub accuracy: f64,
    pub pr_curve: Vec<PrPoint>,
    pub positives: usize,
    pub negatives: usize,
    pub nonzero_weights: usize,
}

impl EvalReport {
    pub fn pr_csv(&self) -> String {
        let mut out = String::from("threshold,recall,precision\n");
        for p in &self.pr_curve {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.recall, p.precision));
        }
        out
    }
}

fn class_counts(labels: &[Label]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Exact area under the ROC curve: the probability that a positive
/// outscores a negative, ties counting one half.
pub fn auroc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    let (pos, neg) = class_counts(labels)?;
    let order = descending(scores);
    // Walk score groups from the top; count, in half-units, the pairs each
    // positive wins against negatives below or tied with it.
    let mut half_wins: u64 = 0;
    let mut negatives_above: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut p, mut q) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]].is_positive() {
                p += 1;
            } else {
                q += 1;
            }
            i += 1;
        }
        let negatives_below = neg as u64 - negatives_above - q;
        half_wins += p * (2 * negatives_below + q);
        negatives_above += q;
    }
    Ok((half_wins as f64 / 2.0) / ((pos * neg) as f64))
}

/// Precision and recall at every distinct score threshold, highest first;
/// a score at or above the threshold counts as a positive prediction.
pub fn pr_curve(scores: &[f64], labels: &[Label]) -> Result<Vec<PrPoint>> {
    let (pos, _) = class_counts(labels)?;
    let order = descending(scores);
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold: s,
            recall: tp as f64 / pos as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(points)
}

/// Fraction of items whose score falls on the right side of 0.5.
pub fn accuracy(scores: &[f64], labels: &[Label]) -> f64 {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| (**s >= 0.5) == l.is_positive())
        .count();
    correct as f64 / scores.len().max(1) as f64
}

/// Metrics of a score list; `nonzero_weights` is left at zero.
pub fn evaluate_scores(scores: &[f64], labels: &[Label]) -> Result<EvalReport> {
    let (positives, negatives) = class_counts(labels)?;
    Ok(EvalReport {
        auroc: auroc(scores, labels)?,
        accuracy: accuracy(scores, labels),
        pr_curve: pr_curve(scores, labels)?,
        positives,
        negatives,
        nonzero_weights: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Negative as N, Positive as P};

    #[test]
    fn perfect_and_inverted_rankings() {
        let labels = [P, P, N, N, N];
        assert_eq!(auroc(&[0.9, 0.8, 0.3, 0.2, 0.1], &labels).unwrap(), 1.0);
        assert_eq!(auroc(&[0.1, 0.2, 0.3, 0.8, 0.9], &labels).unwrap(), 0.0);
        assert_eq!(auroc(&[0.5; 5], &labels).unwrap(), 0.5);
    }

    #[test]
    fn ties_count_half() {
        // Pairs: (0.7 vs 0.7) tie, (0.7 vs 0.2) win, (0.4 vs 0.7) loss, (0.4 vs 0.2) win.
        let a = auroc(&[0.7, 0.4, 0.7, 0.2], &[P, P, N, N]).unwrap();
        assert_eq!(a, 2.5 / 4.0);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(auroc(&[0.1, 0.2], &[P, P]), Err(Error::SingleClass)));
        assert!(evaluate_scores(&[0.1], &[N]).is_err());
    }

    #[test]
    fn pr_curve_shape() {
        let scores = [0.9, 0.8, 0.8, 0.4, 0.1];
        let labels = [P, N, P, P, N];
        let curve = pr_curve(&scores, &labels).unwrap();
        assert_eq!(curve.len(), 4);
        assert_eq!(curve[0].recall, 1.0 / 3.0);
        assert_eq!(curve[0].precision, 1.0);
        assert_eq!(curve[1].recall, 2.0 / 3.0);
        assert_eq!(curve[1].precision, 2.0 / 3.0);
        let last = curve.last().unwrap();
        assert_eq!(last.recall, 1.0);
        assert_eq!(last.precision, 3.0 / 5.0);
        assert!(curve.windows(2).all(|w| w[0].recall <= w[1].recall));
    }

    #[test]
    fn accuracy_at_half() {
        assert_eq!(accuracy(&[0.5, 0.49, 0.9, 0.1], &[P, N, N, N]), 0.75);
    }

    #[test]
    fn csv_export() {
        let r = evaluate_scores(&[0.9, 0.1], &[P, N]).unwrap();
        assert_eq!(r.pr_csv(), "threshold,recall,precision\n0.9,1,1\n0.1,1,0.5\n");
    }
}
