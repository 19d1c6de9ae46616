use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong inside the engine.
///
/// The variants are grouped so that front ends can map them onto coarse
/// categories (see [`Error::kind`]) without matching every case.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("unknown dictionary {0:?}")]
    UnknownDictionary(String),
    #[error("n-gram {start}+{length} is out of range for document {doc_id:?} ({token_count} tokens)")]
    OutOfRange {
        doc_id: String,
        start: usize,
        length: usize,
        token_count: usize,
    },
    #[error("invalid dictionary {id:?}: {reason}")]
    InvalidDictionary { id: String, reason: String },
    #[error("dictionary {0:?} has no corpus support")]
    NoCorpusSupport(String),
    #[error("dictionary {0:?} has no threshold; calibrate first")]
    Uncalibrated(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("non-finite feature value {value} for feature {feature}")]
    NonFinite { feature: usize, value: f64 },
    #[error("feature id {id} is outside the model's {size} features")]
    FeatureOutOfRange { id: usize, size: usize },
    #[error("empty vocabulary (min_df = {0})")]
    EmptyVocabulary(usize),
    #[error("context model has not been trained")]
    UntrainedModel,
    /// A model an operation depends on does not exist yet.
    #[error("missing model: {0}")]
    MissingModel(String),
    /// A model exists but predates changes to the data it was trained on.
    #[error("stale model: {0}")]
    StaleModel(String),
    #[error("{0}")]
    Precondition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse error category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    NotFound,
    /// A model is missing or stale, or some other state precondition fails.
    Conflict,
    Invalid,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownDocument(_) | Error::UnknownDictionary(_) => ErrorKind::NotFound,
            Error::Uncalibrated(_)
            | Error::UntrainedModel
            | Error::MissingModel(_)
            | Error::StaleModel(_)
            | Error::Precondition(_) => ErrorKind::Conflict,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Invalid,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateDocument(_) => "duplicate_document",
            Error::MalformedRecord { .. } => "malformed_record",
            Error::UnknownDocument(_) => "unknown_document",
            Error::UnknownDictionary(_) => "unknown_dictionary",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidDictionary { .. } => "invalid_dictionary",
            Error::NoCorpusSupport(_) => "no_corpus_support",
            Error::Uncalibrated(_) => "uncalibrated",
            Error::SingleClass => "single_class",
            Error::NonFinite { .. } => "non_finite",
            Error::FeatureOutOfRange { .. } => "feature_out_of_range",
            Error::EmptyVocabulary(_) => "empty_vocabulary",
            Error::UntrainedModel => "untrained_model",
            Error::MissingModel(_) => "missing_model",
            Error::StaleModel(_) => "stale_model",
            Error::Precondition(_) => "precondition",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
