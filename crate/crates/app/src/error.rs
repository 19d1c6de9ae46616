use semfeat_core::dictionary::Finding;
use semfeat_core::ErrorKind;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] semfeat_core::Error),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} already exists")]
    SessionExists(String),
    /// A dictionary with validation findings, all of them reported.
    #[error("invalid dictionary {id:?}: {}", findings.iter().map(|f| f.message.as_str()).collect::<Vec<_>>().join("; "))]
    InvalidDictionary { id: String, findings: Vec<Finding> },
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("request body too large: {0}")]
    PayloadTooLarge(String),
    #[error("internal error: {0}")]
    Internal(String),
    /// Labels kept arriving while a retrain was computed.
    #[error("session kept changing during retraining; try again")]
    Busy,
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Core(e.into())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Core(e.into())
    }
}

impl AppError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            // Training on one class is a state problem from the session's
            // point of view: more labels fix it.
            AppError::Core(semfeat_core::Error::SingleClass) => ErrorKind::Conflict,
            AppError::Core(e) => e.kind(),
            AppError::UnknownSession(_) => ErrorKind::NotFound,
            AppError::SessionExists(_) | AppError::Busy => ErrorKind::Conflict,
            AppError::InvalidDictionary { .. } | AppError::BadRequest(_) | AppError::PayloadTooLarge(_) => {
                ErrorKind::Invalid
            }
            AppError::Internal(_) => ErrorKind::Io,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            AppError::Core(e) => e.code(),
            AppError::UnknownSession(_) => "unknown_session",
            AppError::SessionExists(_) => "session_exists",
            AppError::InvalidDictionary { .. } => "invalid_dictionary",
            AppError::BadRequest(_) => "bad_request",
            AppError::PayloadTooLarge(_) => "payload_too_large",
            AppError::Internal(_) => "internal",
            AppError::Busy => "busy",
        }
    }
}
