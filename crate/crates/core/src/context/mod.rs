//! Per-dictionary context models and smoothed matching.

mod model;
mod smooth;
mod window;

pub use model::{
    count_windows, feature_rows, fit_context_model, nb_window_logodds, predict_membership,
    sample_training_instances, train_context_model, ClassCounts, ContextModel,
    ContextTrainConfig, FitSummary, SamplingConfig, WindowCountTables, WindowCounts, CONTEXT_MODEL_VERSION,
};
pub use smooth::{
    calibrate_threshold, candidate_scores, mean_literal_matches, rank_contexts,
    smooth_matches, smoothed_feature, suggest_terms, threshold_for_budget, trigger_percentage,
    Calibration, ContextRow, ContextScorer, SmoothMatch, SmoothMatchList, SmoothMatcher,
    SuggestConfig, Suggestion, SuggestionList, CONTEXT_DISPLAY_TOKENS,
};
pub use window::{extract_instance, ContextInstance, Side, WindowSpec, WINDOW_COUNT};
