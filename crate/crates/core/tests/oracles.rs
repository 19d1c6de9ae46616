//! The engine against brute-force reference implementations.

use rand::Rng;

use semfeat_core::classifier::{auroc, evaluate_scores, train, FeatureSpec, FeatureVector, Scheme};
use semfeat_core::context::{count_windows, feature_rows, nb_window_logodds, WINDOW_COUNT};
use semfeat_core::logistic::{Problem, Regularization};
use semfeat_core::{literal_matches, Label};
use semfeat_testkit::oracle::{naive_matches, nb_logodds, numeric_gradient, pairwise_auroc, relative_error};
use semfeat_testkit::synth::{random_corpus, random_dictionary, random_instances, rng};

#[test]
fn naive_bayes_matches_counting() {
    let mut r = rng(11);
    for _ in 0..20 {
        let vocab = r.gen_range(3..40);
        let n = r.gen_range(2..60);
        let instances = random_instances(&mut r, n, vocab);
        let alpha = [0.5, 1.0, 2.0][r.gen_range(0..3)];
        let model = count_windows("d", &instances, alpha).unwrap();
        for w in 0..WINDOW_COUNT {
            for _ in 0..5 {
                let mut u: Vec<String> = (0..r.gen_range(0..8)).map(|_| format!("t{}", r.gen_range(0..vocab + 3))).collect();
                u.sort();
                u.dedup();
                let got = nb_window_logodds(&model, w, &u).unwrap();
                let want = nb_logodds(&instances, w, &u, alpha);
                assert!((got - want).abs() <= 1e-9, "window {w}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn literal_matches_equal_naive_scan() {
    let mut r = rng(12);
    for _ in 0..30 {
        let vocab = r.gen_range(2..8);
        let docs = r.gen_range(1..10);
        let corpus = random_corpus(&mut r, docs, 40, vocab);
        let terms = r.gen_range(1..6);
        let dict = random_dictionary(&mut r, terms, 3, vocab);
        for doc in corpus.documents() {
            let got: Vec<(usize, usize)> = literal_matches(&corpus, &dict, &doc.id)
                .unwrap()
                .matches
                .iter()
                .map(|m| (m.start, m.length))
                .collect();
            assert_eq!(got, naive_matches(&corpus, &dict, &doc.id));
        }
    }
}

#[test]
fn auroc_equals_pairwise_count() {
    let mut r = rng(13);
    for _ in 0..50 {
        let n = r.gen_range(2..200);
        let levels = r.gen_range(1..20);
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64 / levels as f64).collect();
        let mut labels: Vec<Label> = (0..n).map(|_| Label::from(r.gen_bool(0.4))).collect();
        labels[0] = Label::Positive;
        labels[1] = Label::Negative;
        assert_eq!(auroc(&scores, &labels).unwrap(), pairwise_auroc(&scores, &labels));
        assert_eq!(evaluate_scores(&scores, &labels).unwrap().auroc, pairwise_auroc(&scores, &labels));
    }
}

fn check_gradient(problem: &Problem, lambda: f64, params: &[f64]) {
    let mut grad = vec![0.0; params.len()];
    problem.l2_value_and_gradient(params, lambda, &mut grad);
    let numeric = numeric_gradient(|p| problem.objective(p, Regularization::L2(lambda)), params, 1e-5);
    for (a, b) in grad.iter().zip(&numeric) {
        assert!(relative_error(*a, *b, 1e-6) <= 1e-4, "{a} vs {b}");
    }
}

#[test]
fn context_objective_gradient() {
    let mut r = rng(14);
    let instances = random_instances(&mut r, 80, 12);
    let model = count_windows("d", &instances, 1.0).unwrap();
    let rows = feature_rows(&model, &instances).unwrap();
    let labels: Vec<f64> = instances.iter().map(|i| f64::from(i.inside == Some(true))).collect();
    let problem = Problem::new(&rows, &labels, WINDOW_COUNT).unwrap();
    for _ in 0..5 {
        let params: Vec<f64> = (0..=WINDOW_COUNT).map(|_| r.gen_range(-2.0..2.0)).collect();
        check_gradient(&problem, 1.0, &params);
    }
}

#[test]
fn document_objective_gradient() {
    let mut r = rng(15);
    let n_features = 6;
    let rows: Vec<Vec<(usize, f64)>> = (0..50)
        .map(|_| {
            let mut row = Vec::new();
            for j in 0..n_features {
                if r.gen_bool(0.5) {
                    row.push((j, r.gen_range(0.0..3.0)));
                }
            }
            row
        })
        .collect();
    let labels: Vec<f64> = (0..50).map(|i| (i % 2) as f64).collect();
    let problem = Problem::new(&rows, &labels, n_features).unwrap();
    for _ in 0..5 {
        let params: Vec<f64> = (0..=n_features).map(|_| r.gen_range(-1.0..1.0)).collect();
        check_gradient(&problem, 0.3, &params);
    }
}

#[test]
fn l1_is_sparser_than_l2() {
    let mut r = rng(16);
    let spec = FeatureSpec::dictionaries(Scheme::DictionariesLiteral, (0..30).map(|i| format!("d{i}"))).unwrap();
    // Only the first two features carry signal.
    let data: Vec<(FeatureVector, Label)> = (0..200)
        .map(|i| {
            let y = r.gen_bool(0.5);
            let entries: Vec<(usize, f64)> = (0..30)
                .map(|j| {
                    let signal = if j < 2 && y { 1.0 } else { 0.0 };
                    (j, signal + r.gen_range(0.0..0.5))
                })
                .collect();
            (FeatureVector::new(format!("x{i}"), entries), Label::from(y))
        })
        .collect();
    let l1 = train(&spec, &data, Regularization::L1(5.0)).unwrap();
    let l2 = train(&spec, &data, Regularization::L2(5.0)).unwrap();
    assert!(l1.nonzero_weight_count() < l2.nonzero_weight_count());
    assert!(l1.evaluate(&data).unwrap().auroc > 0.95);
}
