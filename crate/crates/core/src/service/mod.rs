//! Local HTTP service for interactive sessions.
//!
//! | method | path | body | answer |
//! |---|---|---|---|
//! | POST | `/sessions?slide=N` | deck JSON, slide JSON or `.pptx` bytes | `{session_id, doc, svg}` |
//! | GET | `/sessions/{id}/slide` | | `{session_id, doc, svg, history_len}` |
//! | POST | `/sessions/{id}/branch` | `{n, seed?}` | `{branches: [{branch_id, doc, svg}], failures}` |
//! | POST | `/sessions/{id}/select` | `{branch_id}` | `{doc, svg}` |
//! | POST | `/sessions/{id}/labels` | `{element_ids}` | `{doc, svg, touched}` |
//! | POST | `/sessions/{id}/review` | | `{flagged, svg}` |
//! | POST | `/sessions/{id}/refine` | refine options | `{doc, svg, trace}` |
//! | GET | `/sessions/{id}/trace` | | `{session_id, parent, current, history, traces}` |
//! | GET | `/sessions/{id}/export.pptx` | | `.pptx` bytes |
//!
//! Errors are `{"error": {"kind", "message", ...}}` with 404 for an unknown
//! session, 409 while another mutation of the same session is running, 422
//! for bad input (unknown ids are listed under `ids`) and 502 when a backend
//! fails (its raw reply, if any, under `raw`).
//!
//! Every mutation is appended to `<data_dir>/<session_id>.jsonl` before the
//! in-memory state changes, and [`Service::open`] restores all sessions from
//! those logs.

pub mod session;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::model::{deck_from_json, doc_to_value, Deck, ParseMode, SlideDoc};
use crate::orchestrator::RefineOptions;
use crate::pptx::{export_pptx, load_pptx};
use crate::render::{render_svg, RenderOptions};
use crate::roles::touched_ids;

pub use session::{append_event, read_events, Backends, BranchRecord, Event, SessionError, SessionState};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({"error": {"kind": kind, "message": message.into()}}),
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}"))
    }

    fn busy() -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "concurrent_mutation",
            "another change to this session is in progress",
        )
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::UnknownIds(ids) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({"error": {"kind": "unknown_ids", "message": message, "ids": ids}}),
            },
            SessionError::UnknownBranch(id) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({"error": {"kind": "unknown_branch", "message": message, "ids": [id]}}),
            },
            SessionError::BadRequest(_) => Self::invalid(message),
            SessionError::Budget { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "token_budget", message),
            SessionError::Backend { raw, .. } => ApiError {
                status: StatusCode::BAD_GATEWAY,
                body: json!({"error": {"kind": "backend", "message": message, "raw": raw}}),
            },
            SessionError::Log(_) => Self::internal(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

struct Session {
    busy: AtomicBool,
    state: Mutex<SessionState>,
    log: Mutex<Option<std::fs::File>>,
}

/// Clears the session's busy flag when dropped.
struct Writer(Arc<Session>);

impl Drop for Writer {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::Release);
    }
}

impl Session {
    fn begin(self: &Arc<Self>) -> Result<Writer, ApiError> {
        self.busy
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map(|_| Writer(self.clone()))
            .map_err(|_| ApiError::busy())
    }

    fn snapshot(&self) -> SessionState {
        self.state.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

pub struct Service {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    backends: Backends,
    data_dir: Option<PathBuf>,
    render: RenderOptions,
    refine: RefineOptions,
    hold: Duration,
}

impl Service {
    /// Service without persistence.
    pub fn in_memory(backends: Backends) -> Service {
        Service {
            sessions: RwLock::new(HashMap::new()),
            backends,
            data_dir: None,
            render: RenderOptions::default(),
            refine: RefineOptions::default(),
            hold: Duration::ZERO,
        }
    }

    /// Service persisting to `data_dir`, restoring any sessions found there.
    pub fn open(data_dir: &Path, backends: Backends) -> Result<Service, SessionError> {
        std::fs::create_dir_all(data_dir).map_err(|e| SessionError::Log(e.to_string()))?;
        let mut service = Service::in_memory(backends);
        service.data_dir = Some(data_dir.to_path_buf());
        let mut paths: Vec<PathBuf> = std::fs::read_dir(data_dir)
            .map_err(|e| SessionError::Log(e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let state = SessionState::restore(&read_events(&path)?)?;
            let log = session::open_log(&path).map_err(|e| SessionError::Log(e.to_string()))?;
            service.insert(state, Some(log));
        }
        Ok(service)
    }

    pub fn with_refine_options(mut self, opts: RefineOptions) -> Self {
        self.refine = opts;
        self
    }

    pub fn with_render_options(mut self, opts: RenderOptions) -> Self {
        self.render = opts;
        self
    }

    /// Keeps every mutation in flight for at least `hold`, so tests can
    /// overlap requests deterministically.
    pub fn with_mutation_hold(mut self, hold: Duration) -> Self {
        self.hold = hold;
        self
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap_or_else(|p| p.into_inner()).keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn state(&self, id: &str) -> Option<SessionState> {
        self.get(id).ok().map(|s| s.snapshot())
    }

    pub fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    fn insert(&self, state: SessionState, log: Option<std::fs::File>) {
        let id = state.session_id.clone();
        let session = Arc::new(Session {
            busy: AtomicBool::new(false),
            state: Mutex::new(state),
            log: Mutex::new(log),
        });
        self.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(id, session);
    }

    fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn svg(&self, doc: &SlideDoc) -> String {
        render_svg(doc, &self.render)
    }

    pub fn create(&self, doc: &SlideDoc) -> Result<SessionState, SessionError> {
        let id = uuid::Uuid::new_v4().to_string();
        let (state, event) = SessionState::new(id.clone(), doc);
        let log = match self.log_path(&id) {
            Some(path) => {
                let mut f = session::open_log(&path).map_err(|e| SessionError::Log(e.to_string()))?;
                append_event(&mut f, 0, &event).map_err(|e| SessionError::Log(e.to_string()))?;
                Some(f)
            }
            None => None,
        };
        self.insert(state.clone(), log);
        Ok(state)
    }

    /// Runs `compute` on a snapshot off the async runtime, then persists and
    /// applies the resulting event.
    async fn mutate<F>(self: &Arc<Self>, id: &str, compute: F) -> Result<SessionState, ApiError>
    where
        F: FnOnce(&SessionState, &Backends) -> Result<Event, SessionError> + Send + 'static,
    {
        let session = self.get(id)?;
        let _writer = session.begin()?;
        let snapshot = session.snapshot();
        let backends = self.backends.clone();
        let hold = self.hold;
        let event = tokio::task::spawn_blocking(move || {
            std::thread::sleep(hold);
            compute(&snapshot, &backends)
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;

        let mut state = session.snapshot();
        let seq = state.history.len();
        state.apply(event.clone())?;
        if let Some(f) = session.log.lock().unwrap_or_else(|p| p.into_inner()).as_mut() {
            append_event(f, seq, &event).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        *session.state.lock().unwrap_or_else(|p| p.into_inner()) = state.clone();
        Ok(state)
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id/slide", get(get_slide))
        .route("/sessions/:id/branch", post(post_branch))
        .route("/sessions/:id/select", post(post_select))
        .route("/sessions/:id/labels", post(post_labels))
        .route("/sessions/:id/review", post(post_review))
        .route("/sessions/:id/refine", post(post_refine))
        .route("/sessions/:id/trace", get(get_trace))
        .route("/sessions/:id/export.pptx", get(get_export))
        .layer(middleware::from_fn(cors))
        .with_state(service)
}

/// Lets a browser UI on another local origin call the API.
async fn cors(req: axum::extract::Request, next: Next) -> Response {
    let preflight = req.method() == Method::OPTIONS;
    let mut resp = if preflight {
        StatusCode::NO_CONTENT.into_response()
    } else {
        next.run(req).await
    };
    let h = resp.headers_mut();
    h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
    h.insert(header::ACCESS_CONTROL_ALLOW_METHODS, HeaderValue::from_static("GET, POST, OPTIONS"));
    h.insert(header::ACCESS_CONTROL_ALLOW_HEADERS, HeaderValue::from_static("content-type"));
    resp
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(service: Arc<Service>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(format!("bad request body: {e}")))
}

fn ok(status: StatusCode, v: Value) -> ApiResult {
    Ok((status, Json(v)).into_response())
}

#[derive(Deserialize)]
struct CreateQuery {
    #[serde(default)]
    slide: usize,
}

async fn create_session(
    State(svc): State<Arc<Service>>,
    Query(q): Query<CreateQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let is_pptx = body.starts_with(b"PK")
        || headers
            .get(header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.contains("presentationml") || v == "application/octet-stream");
    let (deck, skipped) = if is_pptx {
        let (deck, report) = load_pptx(&body).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.kind(), e.to_string()))?;
        (deck, json!(report.skipped))
    } else {
        let text = std::str::from_utf8(&body).map_err(|_| ApiError::invalid("body is neither UTF-8 JSON nor a .pptx archive"))?;
        let deck: Deck = deck_from_json(text, ParseMode::Strict).map_err(|e| ApiError::invalid(e.to_string()))?;
        (deck, json!([]))
    };
    let doc = deck
        .slides
        .get(q.slide)
        .ok_or_else(|| ApiError::invalid(format!("slide {} not found; the deck has {}", q.slide, deck.slides.len())))?;
    let svc2 = svc.clone();
    let doc = doc.clone();
    let state = tokio::task::spawn_blocking(move || svc2.create(&doc))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    ok(
        StatusCode::CREATED,
        json!({
            "session_id": state.session_id,
            "doc": doc_to_value(&state.current),
            "svg": svc.svg(&state.current),
            "skipped": skipped,
        }),
    )
}

async fn get_slide(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let state = svc.get(&id)?.snapshot();
    ok(
        StatusCode::OK,
        json!({
            "session_id": id,
            "doc": doc_to_value(&state.current),
            "svg": svc.svg(&state.current),
            "history_len": state.history.len(),
        }),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchBody {
    n: usize,
    #[serde(default)]
    seed: Option<u64>,
}

async fn post_branch(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult {
    let req: BranchBody = json_body(&body)?;
    if req.n == 0 || req.n > 16 {
        return Err(ApiError::invalid("n must be between 1 and 16"));
    }
    let state = svc.mutate(&id, move |s, b| s.branch(b, req.n, req.seed)).await?;
    let failures = match state.history.last() {
        Some(Event::Branched { failures, .. }) => json!(failures),
        _ => json!([]),
    };
    let branches: Vec<Value> = state
        .branches
        .iter()
        .map(|b| json!({"branch_id": b.branch_id, "doc": doc_to_value(&b.doc), "svg": svc.svg(&b.doc)}))
        .collect();
    ok(StatusCode::OK, json!({"branches": branches, "failures": failures}))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectBody {
    branch_id: String,
}

async fn post_select(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult {
    let req: SelectBody = json_body(&body)?;
    let state = svc.mutate(&id, move |s, _| s.select(&req.branch_id)).await?;
    ok(
        StatusCode::OK,
        json!({"doc": doc_to_value(&state.current), "svg": svc.svg(&state.current)}),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsBody {
    element_ids: Vec<String>,
}

async fn post_labels(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult {
    let req: LabelsBody = json_body(&body)?;
    if req.element_ids.is_empty() {
        return Err(ApiError::invalid("element_ids is empty"));
    }
    let before = svc.get(&id)?.snapshot().current;
    let state = svc.mutate(&id, move |s, b| s.label(b, &req.element_ids)).await?;
    ok(
        StatusCode::OK,
        json!({
            "doc": doc_to_value(&state.current),
            "svg": svc.svg(&state.current),
            "touched": touched_ids(&before, &state.current),
        }),
    )
}

async fn post_review(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let state = svc.mutate(&id, |s, b| s.review(b)).await?;
    let flagged = match state.history.last() {
        Some(Event::Reviewed { flagged }) => flagged.clone(),
        _ => Vec::new(),
    };
    let highlighted = state.current.with_flags(&flagged);
    let svg = render_svg(
        &highlighted,
        &RenderOptions {
            highlight_tentative: true,
            ..svc.render.clone()
        },
    );
    ok(StatusCode::OK, json!({"flagged": flagged, "svg": svg}))
}

async fn post_refine(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult {
    let opts: RefineOptions = if body.iter().all(u8::is_ascii_whitespace) {
        svc.refine.clone()
    } else {
        json_body(&body)?
    };
    if opts.max_iterations == 0 {
        return Err(ApiError::invalid("max_iterations must be at least 1"));
    }
    let state = svc.mutate(&id, move |s, b| s.refine(b, &opts)).await?;
    let trace = state.traces.last().map(|t| t.to_value()).unwrap_or(Value::Null);
    ok(
        StatusCode::OK,
        json!({"doc": doc_to_value(&state.current), "svg": svc.svg(&state.current), "trace": trace}),
    )
}

async fn get_trace(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let state = svc.get(&id)?.snapshot();
    ok(
        StatusCode::OK,
        json!({
            "session_id": id,
            "parent": doc_to_value(&state.parent),
            "current": doc_to_value(&state.current),
            "history": state.history_values(),
            "traces": state.traces.iter().map(|t| t.to_value()).collect::<Vec<_>>(),
        }),
    )
}

async fn get_export(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let state = svc.get(&id)?.snapshot();
    let deck = Deck {
        title: state.current.source_id.clone(),
        slides: vec![state.current],
    };
    let bytes = export_pptx(&deck).map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok((
        [
            (
                header::CONTENT_TYPE,
                "application/vnd.openxmlformats-officedocument.presentationml.presentation".to_string(),
            ),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{id}.pptx\"")),
        ],
        bytes,
    )
        .into_response())
}
