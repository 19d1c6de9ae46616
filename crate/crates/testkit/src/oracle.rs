//! Brute-force reference implementations. Each one recomputes its answer
//! from scratch with the most direct algorithm available.

use std::collections::BTreeSet;

use semfeat_core::context::ContextInstance;
use semfeat_core::{Corpus, Dictionary, Label};

/// Naive-Bayes log odds of one window, counted straight from the training
/// instances: every token is counted at most once per instance, and the
/// vocabulary is every token seen in any window of any instance.
pub fn nb_logodds(instances: &[ContextInstance], window: usize, unigrams: &[String], alpha: f64) -> f64 {
    let vocab: BTreeSet<&str> = instances
        .iter()
        .flat_map(|i| i.windows.iter().flatten())
        .map(String::as_str)
        .collect();
    let v = vocab.len() as f64;
    let count = |inside: bool, token: &str| -> (f64, f64) {
        let mut hits = 0.0;
        let mut total = 0.0;
        for inst in instances.iter().filter(|i| i.inside == Some(inside)) {
            let distinct: BTreeSet<&String> = inst.windows[window].iter().collect();
            total += distinct.len() as f64;
            if distinct.iter().any(|t| t.as_str() == token) {
                hits += 1.0;
            }
        }
        (hits, total)
    };
    let distinct: BTreeSet<&String> = unigrams.iter().collect();
    let mut sum = 0.0;
    for u in distinct {
        let (ci, ti) = count(true, u);
        let (co, to) = count(false, u);
        let p_in = (ci + alpha) / (ti + alpha * v);
        let p_out = (co + alpha) / (to + alpha * v);
        sum += p_in.ln() - p_out.ln();
    }
    sum
}

/// Every `(start, length)` at which some dictionary term occurs in the
/// document, found by comparing each term against each position.
pub fn naive_matches(corpus: &Corpus, dict: &Dictionary, doc_id: &str) -> Vec<(usize, usize)> {
    let tokens = &corpus.document(doc_id).expect("document exists").tokens;
    let mut out = BTreeSet::new();
    for start in 0..tokens.len() {
        for term in &dict.terms {
            if !term.is_empty() && start + term.len() <= tokens.len() && tokens[start..start + term.len()] == term[..] {
                out.insert((start, term.len()));
            }
        }
    }
    out.into_iter().collect()
}

/// AUROC by comparing every positive with every negative.
pub fn pairwise_auroc(scores: &[f64], labels: &[Label]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, li) in labels.iter().enumerate() {
        if !li.is_positive() {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if lj.is_positive() {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Central finite-difference gradient.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_auroc_by_hand() {
        use Label::{Negative as N, Positive as P};
        assert_eq!(pairwise_auroc(&[0.7, 0.4, 0.7, 0.2], &[P, P, N, N]), 0.625);
    }

    #[test]
    fn numeric_gradient_of_a_quadratic() {
        let g = numeric_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }
}
