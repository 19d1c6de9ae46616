//! Dictionary and smoothed-dictionary features for interactive binary text
//! classification.
//!
//! A teacher groups n-grams into [`dictionary::Dictionary`] concepts. Each
//! dictionary yields a literal count feature, and, once a
//! [`context::ContextModel`] has been trained on its occurrences, a smoothed
//! feature that counts positions whose *context* looks like the dictionary.
//! [`classifier`] turns either kind (or a TF-IDF bag of words) into logistic
//! regression document classifiers, and [`teach`] runs the label/feature
//! loop around them.

pub mod classifier;
pub mod context;
pub mod corpus;
pub mod dictionary;
pub mod error;
pub mod logistic;
pub mod teach;

pub use corpus::{tokenize, Corpus, Document, Label, NgramRef, Record};
pub use dictionary::{dict_feature, literal_matches, Dictionary};
pub use error::{Error, ErrorKind, Result};
