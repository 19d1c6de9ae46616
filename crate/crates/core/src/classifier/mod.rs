//! Feature assembly, logistic-regression document classifiers and
//! evaluation metrics.

mod features;
mod metrics;
mod model;

pub use features::{
    build_bow_spec, vectorize, BowTerm, ContextModels, FeatureSpec, LabelDocs, FeatureVector, Scheme, Vectorizer,
};
pub use metrics::{accuracy, auroc, evaluate_scores, pr_curve, EvalReport, PrPoint};
pub use model::{
    evaluate, nonzero_weight_count, predict, train, training_rows, LabeledVector, LogRegModel,
    TrainingMeta, LOGREG_VERSION, WEIGHT_EPSILON,
};
