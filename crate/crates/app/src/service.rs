//! HTTP/JSON front end of the teaching loop.
//!
//! Each session sits behind its own async mutex holding an `Arc` of the
//! current state: writers take the lock and mutate (copy-on-write if a
//! reader still holds the old `Arc`), readers clone the `Arc` and work on
//! that immutable snapshot without blocking anyone. Engine calls run on the
//! blocking pool. Retraining is computed on a snapshot with the lock
//! released and published only if no other event landed meanwhile.

use std::collections::HashMap;
use std::path::Path as FsPath;
use std::sync::{Arc, Mutex as StdMutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::{Mutex, OwnedMutexGuard};
use tower_http::services::ServeDir;

use semfeat_core::teach::TeachingSession;
use semfeat_core::ErrorKind;

use crate::config::{ServiceConfig, Workspace};
use crate::error::{AppError, Result};
use crate::ops;

/// Retrain attempts before giving up on a session that keeps changing.
const RETRAIN_ATTEMPTS: usize = 3;

type Slot = Arc<Mutex<Arc<TeachingSession>>>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    ws: Workspace,
    sessions: StdMutex<HashMap<String, Slot>>,
}

async fn blocking<T, F>(f: F) -> Result<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| AppError::Internal(e.to_string()))?
}

impl AppState {
    pub fn new(ws: Workspace) -> Self {
        AppState {
            inner: Arc::new(Inner {
                ws,
                sessions: StdMutex::new(HashMap::new()),
            }),
        }
    }

    pub fn workspace(&self) -> &Workspace {
        &self.inner.ws
    }

    fn sessions(&self) -> std::sync::MutexGuard<'_, HashMap<String, Slot>> {
        self.inner.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    async fn slot(&self, id: &str) -> Result<Slot> {
        if let Some(s) = self.sessions().get(id) {
            return Ok(s.clone());
        }
        let st = self.clone();
        let key = id.to_string();
        let loaded = blocking(move || st.workspace().store.load(&st.workspace().corpus, &key)).await?;
        Ok(self
            .sessions()
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(Arc::new(loaded))))
            .clone())
    }

    /// Current state of a session, without holding its lock.
    pub async fn snapshot(&self, id: &str) -> Result<Arc<TeachingSession>> {
        let slot = self.slot(id).await?;
        let s = slot.lock().await.clone();
        Ok(s)
    }

    async fn read<T, F>(&self, id: &str, f: F) -> Result<T>
    where
        T: Send + 'static,
        F: FnOnce(&TeachingSession, &Workspace) -> Result<T> + Send + 'static,
    {
        let s = self.snapshot(id).await?;
        let st = self.clone();
        blocking(move || f(&s, st.workspace())).await
    }

    async fn write<T, F>(&self, id: &str, f: F) -> Result<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut TeachingSession, &Workspace) -> Result<T> + Send + 'static,
    {
        let guard = self.slot(id).await?.lock_owned().await;
        self.commit(guard, f).await
    }

    /// Runs a mutation under the session lock and persists the events it
    /// added before returning. If persisting fails the session is reloaded
    /// from disk, dropping the unacknowledged change.
    async fn commit<T, F>(&self, mut guard: OwnedMutexGuard<Arc<TeachingSession>>, f: F) -> Result<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut TeachingSession, &Workspace) -> Result<T> + Send + 'static,
    {
        let st = self.clone();
        blocking(move || {
            let ws = st.workspace();
            let from = guard.next_seq();
            let result = {
                let session = Arc::make_mut(&mut *guard);
                let out = f(session, ws)?;
                if session.next_seq() > from {
                    ws.store.persist(session, from).map(|()| out)
                } else {
                    Ok(out)
                }
            };
            if result.is_err() {
                let id = guard.id.clone();
                match ws.store.load(&ws.corpus, &id) {
                    Ok(reloaded) => *guard = Arc::new(reloaded),
                    Err(_) => {
                        st.sessions().remove(&id);
                    }
                }
            }
            result
        })
        .await
    }

    async fn create(&self, req: ops::CreateSessionRequest) -> Result<Arc<TeachingSession>> {
        let st = self.clone();
        let session = blocking(move || {
            let ws = st.workspace();
            let session = ops::create(&ws.corpus, &ws.defaults, req)?;
            ws.store.create(&session)?;
            Ok(Arc::new(session))
        })
        .await?;
        // A request may already have loaded it from disk; keep that slot.
        self.sessions()
            .entry(session.id.clone())
            .or_insert_with(|| Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    /// Trains on a snapshot with the lock released, then publishes the
    /// result if the session has not moved on.
    async fn retrain(&self, id: &str, req: ops::RetrainRequest) -> Result<ops::ModelSummary> {
        let slot = self.slot(id).await?;
        for _ in 0..RETRAIN_ATTEMPTS {
            let s = slot.lock().await.clone();
            let st = self.clone();
            let req = req.clone();
            let retrained = blocking(move || {
                let reg = req.regularization.unwrap_or(s.settings.regularization);
                Ok(s.compute_retrain(&st.workspace().corpus, req.scheme, reg)?)
            })
            .await?;
            let guard = slot.clone().lock_owned().await;
            if guard.next_seq() != retrained.based_on_seq() {
                continue;
            }
            return self
                .commit(guard, move |s, _| {
                    s.commit_retrain(retrained)?;
                    ops::current_summary(s)
                })
                .await;
        }
        Err(AppError::Busy)
    }
}

/// JSON request body. An empty body reads as JSON `null`, so optional
/// bodies are written `Body<Option<T>>`.
struct Body<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = AppError;

    async fn from_request(req: Request, state: &S) -> Result<Self, AppError> {
        let bytes = Bytes::from_request(req, state).await.map_err(|e| {
            if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
                AppError::PayloadTooLarge(e.body_text())
            } else {
                AppError::BadRequest(e.body_text())
            }
        })?;
        let text: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
            b"null"
        } else {
            &bytes
        };
        serde_json::from_slice(text)
            .map(Body)
            .map_err(|e| AppError::BadRequest(format!("request body: {e}")))
    }
}

/// Query string parameters.
struct Params<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = AppError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, AppError> {
        Query::try_from_uri(&parts.uri)
            .map(|Query(q)| Params(q))
            .map_err(|e| AppError::BadRequest(e.body_text()))
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = match (&self, self.kind()) {
            (AppError::PayloadTooLarge(_), _) => StatusCode::PAYLOAD_TOO_LARGE,
            (_, ErrorKind::NotFound) => StatusCode::NOT_FOUND,
            (_, ErrorKind::Conflict) => StatusCode::CONFLICT,
            (_, ErrorKind::Invalid) => StatusCode::UNPROCESSABLE_ENTITY,
            (_, ErrorKind::Io) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut error = json!({ "code": self.code(), "message": self.to_string() });
        if let AppError::InvalidDictionary { findings, .. } = &self {
            error["findings"] = json!(findings);
        }
        (status, Json(json!({ "error": error }))).into_response()
    }
}

type Reply<T> = Result<Json<T>>;

async fn list_sessions(State(st): State<AppState>) -> Reply<Vec<String>> {
    let store = st.workspace().store.clone();
    Ok(Json(blocking(move || store.session_ids()).await?))
}

async fn create_session(
    State(st): State<AppState>,
    Body(req): Body<ops::CreateSessionRequest>,
) -> Result<(StatusCode, Json<Arc<TeachingSession>>)> {
    Ok((StatusCode::CREATED, Json(st.create(req).await?)))
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> Reply<Arc<TeachingSession>> {
    Ok(Json(st.snapshot(&id).await?))
}

async fn post_label(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<ops::LabelRequest>,
) -> Reply<ops::LabelResponse> {
    Ok(Json(st.write(&id, move |s, ws| ops::label(s, &ws.corpus, req)).await?))
}

async fn get_next(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Params(q): Params<ops::NextQuery>,
) -> Reply<ops::NextResponse> {
    Ok(Json(st.read(&id, move |s, ws| ops::next(s, &ws.corpus, q)).await?))
}

async fn post_retrain(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<ops::RetrainRequest>,
) -> Reply<ops::ModelSummary> {
    Ok(Json(st.retrain(&id, req).await?))
}

async fn get_blindness(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Reply<semfeat_core::teach::BlindnessReport> {
    Ok(Json(st.read(&id, |s, ws| ops::blindness(s, &ws.corpus)).await?))
}

async fn get_status(State(st): State<AppState>, Path(id): Path<String>) -> Reply<ops::SessionStatus> {
    Ok(Json(st.read(&id, |s, ws| ops::status(s, &ws.corpus)).await?))
}

async fn get_metrics(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Params(q): Params<ops::MetricsQuery>,
) -> Reply<semfeat_core::classifier::EvalReport> {
    Ok(Json(st.read(&id, move |s, ws| ops::metrics(s, &ws.corpus, q)).await?))
}

async fn put_dictionary(
    State(st): State<AppState>,
    Path((id, did)): Path<(String, String)>,
    Body(body): Body<ops::DictionaryBody>,
) -> Reply<semfeat_core::Dictionary> {
    let dict = body.into_dictionary(&did)?;
    Ok(Json(st.write(&id, move |s, ws| ops::put_dictionary(s, &ws.corpus, dict)).await?))
}

async fn delete_dictionary(
    State(st): State<AppState>,
    Path((id, did)): Path<(String, String)>,
) -> Reply<ops::Removed> {
    Ok(Json(st.write(&id, move |s, ws| ops::delete_dictionary(s, &ws.corpus, &did)).await?))
}

async fn put_threshold(
    State(st): State<AppState>,
    Path((id, did)): Path<(String, String)>,
    Body(req): Body<ops::ThresholdRequest>,
) -> Reply<semfeat_core::Dictionary> {
    Ok(Json(st.write(&id, move |s, ws| ops::set_threshold(s, &ws.corpus, &did, req)).await?))
}

async fn post_train_context(
    State(st): State<AppState>,
    Path((id, did)): Path<(String, String)>,
    Body(req): Body<Option<ops::TrainContextRequest>>,
) -> Reply<ops::ContextModelSummary> {
    let req = req.unwrap_or_default();
    Ok(Json(
        st.write(&id, move |s, ws| ops::train_context(s, &ws.corpus, &ws.defaults, &did, req))
            .await?,
    ))
}

async fn post_calibrate(
    State(st): State<AppState>,
    Path((id, did)): Path<(String, String)>,
    Body(req): Body<Option<ops::CalibrateRequest>>,
) -> Reply<semfeat_core::context::Calibration> {
    let req = req.unwrap_or_default();
    Ok(Json(
        st.write(&id, move |s, ws| ops::calibrate(s, &ws.corpus, &ws.defaults, &did, req))
            .await?,
    ))
}

async fn get_contexts(
    State(st): State<AppState>,
    Path((id, did)): Path<(String, String)>,
    Params(q): Params<ops::ContextsQuery>,
) -> Reply<ops::ContextsResponse> {
    Ok(Json(st.read(&id, move |s, ws| ops::contexts(s, &ws.corpus, &did, q)).await?))
}

async fn get_suggestions(
    State(st): State<AppState>,
    Path((id, did)): Path<(String, String)>,
    Params(q): Params<ops::SuggestionsQuery>,
) -> Reply<semfeat_core::context::SuggestionList> {
    Ok(Json(st.read(&id, move |s, ws| ops::suggestions(s, &ws.corpus, &did, q)).await?))
}

async fn get_doc(State(st): State<AppState>, Path(id): Path<String>) -> Reply<ops::DocResponse> {
    Ok(Json(ops::doc(&st.workspace().corpus, &id)?))
}

async fn no_route() -> Response {
    let body = json!({ "error": { "code": "no_route", "message": "no such endpoint" } });
    (StatusCode::NOT_FOUND, Json(body)).into_response()
}

pub fn router(state: AppState, max_body_bytes: usize, static_dir: Option<&FsPath>) -> Router {
    let dict = "/sessions/{id}/dictionaries/{did}";
    let api = Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/labels", post(post_label))
        .route("/sessions/{id}/next", get(get_next))
        .route("/sessions/{id}/retrain", post(post_retrain))
        .route("/sessions/{id}/blindness", get(get_blindness))
        .route("/sessions/{id}/status", get(get_status))
        .route("/sessions/{id}/metrics", get(get_metrics))
        .route(dict, put(put_dictionary).delete(delete_dictionary))
        .route(&format!("{dict}/threshold"), put(put_threshold))
        .route(&format!("{dict}/train-context"), post(post_train_context))
        .route(&format!("{dict}/calibrate"), post(post_calibrate))
        .route(&format!("{dict}/contexts"), get(get_contexts))
        .route(&format!("{dict}/suggestions"), get(get_suggestions))
        .route("/docs/{id}", get(get_doc))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(no_route),
    }
}

/// Opens the workspace and binds the listener; fails on an unwritable
/// data directory, a missing corpus or a busy port.
pub async fn bind(config: &ServiceConfig) -> Result<(TcpListener, Router)> {
    let ws = Workspace::open(
        &config.data_dir,
        config.corpus.as_deref(),
        config.defaults.clone(),
        config.snapshot_every,
    )?;
    let listener = TcpListener::bind(config.listen).await?;
    let app = router(AppState::new(ws), config.max_body_bytes, config.static_dir.as_deref());
    Ok((listener, app))
}

pub async fn serve(config: ServiceConfig) -> Result<()> {
    let (listener, app) = bind(&config).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
