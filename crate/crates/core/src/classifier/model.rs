use serde::{Deserialize, Serialize};

use super::features::{FeatureSpec, FeatureVector};
use super::metrics::{evaluate_scores, EvalReport};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::logistic::{sigmoid, Problem, Regularization, SparseRow};

pub const LOGREG_VERSION: &str = "logreg/1";
pub const WEIGHT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub examples: usize,
}

/// Document classifier. Weights are stored sparsely, sorted by feature id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub version: String,
    pub spec: FeatureSpec,
    pub weights: Vec<(usize, f64)>,
    pub bias: f64,
    pub regularization: Regularization,
    pub meta: TrainingMeta,
}

pub type LabeledVector = (FeatureVector, Label);

impl LogRegModel {
    /// The all-zero model, predicting 0.5 everywhere.
    pub fn zero(spec: FeatureSpec) -> Self {
        LogRegModel {
            version: LOGREG_VERSION.into(),
            spec,
            weights: Vec::new(),
            bias: 0.0,
            regularization: Regularization::default(),
            meta: TrainingMeta::default(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.version != LOGREG_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model version {:?}",
                self.version
            )));
        }
        let n = self.spec.n_features();
        for &(id, w) in &self.weights {
            if id >= n {
                return Err(Error::FeatureOutOfRange { id, size: n });
            }
            if !w.is_finite() {
                return Err(Error::NonFinite { feature: id, value: w });
            }
        }
        Ok(())
    }

    pub fn weight(&self, id: usize) -> f64 {
        self.weights
            .binary_search_by_key(&id, |e| e.0)
            .map(|i| self.weights[i].1)
            .unwrap_or(0.0)
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<f64> {
        let n = self.spec.n_features();
        let mut z = self.bias;
        for &(id, x) in &v.entries {
            if id >= n {
                return Err(Error::FeatureOutOfRange { id, size: n });
            }
            z += self.weight(id) * x;
        }
        Ok(sigmoid(z))
    }

    pub fn nonzero_weight_count(&self) -> usize {
        self.weights
            .iter()
            .filter(|(_, w)| w.abs() > WEIGHT_EPSILON)
            .count()
    }

    pub fn evaluate(&self, test: &[LabeledVector]) -> Result<EvalReport> {
        let scores = test
            .iter()
            .map(|(v, _)| self.predict(v))
            .collect::<Result<Vec<f64>>>()?;
        let labels: Vec<Label> = test.iter().map(|(_, l)| *l).collect();
        let mut report = evaluate_scores(&scores, &labels)?;
        report.nonzero_weights = self.nonzero_weight_count();
        Ok(report)
    }
}

/// Optimization problem rows for a labeled vector set.
pub fn training_rows(examples: &[LabeledVector]) -> (Vec<SparseRow>, Vec<f64>) {
    examples
        .iter()
        .map(|(v, l)| (v.entries.clone(), l.as_f64()))
        .unzip()
}

pub fn train(
    spec: &FeatureSpec,
    examples: &[LabeledVector],
    regularization: Regularization,
) -> Result<LogRegModel> {
    let lambda = regularization.lambda();
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidArgument("lambda must be finite and nonnegative".into()));
    }
    let (rows, labels) = training_rows(examples);
    let problem = Problem::new(&rows, &labels, spec.n_features())?;
    let fit = problem.train(regularization);
    let weights = fit.params[1..]
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(j, &w)| (j, w))
        .collect();
    Ok(LogRegModel {
        version: LOGREG_VERSION.into(),
        spec: spec.clone(),
        weights,
        bias: fit.params[0],
        regularization,
        meta: TrainingMeta {
            iterations: fit.iterations,
            objective: fit.objective,
            gradient_norm: fit.gradient_norm,
            converged: fit.converged,
            examples: examples.len(),
        },
    })
}

pub fn predict(model: &LogRegModel, v: &FeatureVector) -> Result<f64> {
    model.predict(v)
}

pub fn evaluate(model: &LogRegModel, test: &[LabeledVector]) -> Result<EvalReport> {
    model.evaluate(test)
}

pub fn nonzero_weight_count(model: &LogRegModel) -> usize {
    model.nonzero_weight_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::features::Scheme;

    fn spec(n: usize) -> FeatureSpec {
        FeatureSpec::dictionaries(Scheme::DictionariesLiteral, (0..n).map(|i| format!("d{i}")))
            .unwrap()
    }

    fn fv(id: &str, e: &[(usize, f64)]) -> FeatureVector {
        FeatureVector::new(id, e.iter().copied())
    }

    #[test]
    fn two_separable_points() {
        let s = spec(1);
        let data = vec![
            (fv("a", &[(0, 1.0)]), Label::Positive),
            (fv("b", &[]), Label::Negative),
        ];
        let m = train(&s, &data, Regularization::L2(1.0)).unwrap();
        let r = m.evaluate(&data).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.auroc, 1.0);
        assert!(m.meta.converged);
    }

    #[test]
    fn huge_penalty_zeroes_weights() {
        let s = spec(2);
        let data = vec![
            (fv("a", &[(0, 1.0), (1, 0.3)]), Label::Positive),
            (fv("b", &[(1, 2.0)]), Label::Negative),
            (fv("c", &[(0, 0.5)]), Label::Positive),
        ];
        let m = train(&s, &data, Regularization::L2(1e6)).unwrap();
        assert!(m.weights.iter().all(|(_, w)| w.abs() < 1e-3), "{:?}", m.weights);
    }

    #[test]
    fn prediction_arithmetic() {
        let s = spec(2);
        let zero = LogRegModel::zero(s.clone());
        assert_eq!(zero.predict(&fv("a", &[(0, 3.0)])).unwrap(), 0.5);
        assert_eq!(zero.nonzero_weight_count(), 0);

        let mut m = LogRegModel::zero(s);
        m.weights = vec![(0, 1.0)];
        let p = m.predict(&fv("a", &[(0, 2f64.ln())])).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            m.predict(&fv("a", &[(2, 1.0)])),
            Err(Error::FeatureOutOfRange { id: 2, size: 2 })
        ));
    }

    #[test]
    fn errors() {
        let s = spec(1);
        let one_class = vec![(fv("a", &[(0, 1.0)]), Label::Positive)];
        assert!(matches!(
            train(&s, &one_class, Regularization::L2(1.0)),
            Err(Error::SingleClass)
        ));
        let bad = vec![
            (fv("a", &[(0, f64::INFINITY)]), Label::Positive),
            (fv("b", &[]), Label::Negative),
        ];
        assert!(matches!(
            train(&s, &bad, Regularization::L2(1.0)),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let s = spec(2);
        let data = vec![
            (fv("a", &[(0, 1.0)]), Label::Positive),
            (fv("b", &[(1, 1.0)]), Label::Negative),
        ];
        let m = train(&s, &data, Regularization::L1(0.01)).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"logreg/1\""));
        let back: LogRegModel = serde_json::from_str(&json).unwrap();
        back.check().unwrap();
        assert_eq!(back, m);
    }
}
