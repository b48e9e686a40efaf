//! `ifgen serve`: HTTP sessions over one interface spec.
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | GET | `/spec` | `?session=ID` (optional) | the InterfaceSpec JSON |
//! | POST | `/session` | none | [`SessionState`] |
//! | POST | `/interact` | [`InteractRequest`] | [`SessionState`] |
//! | GET | `/result` | `?session=ID` | [`QueryResult`] |
//!
//! Errors are `{"error": code, "message": text}` plus `domain` for
//! `out_of_domain`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use ifgen::difftree::Path;
use ifgen::widgets::{apply_widget, widget_states, InteractError, InterfaceSpec, WidgetState};

use crate::data::Database;
use crate::error::CliError;

pub struct AppState {
    initial: InterfaceSpec,
    data: Option<Database>,
    sessions: Mutex<HashMap<String, InterfaceSpec>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(initial: InterfaceSpec, data: Option<Database>) -> Self {
        AppState {
            initial,
            data,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    fn session(&self, id: &str) -> Result<InterfaceSpec, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session: String,
    pub current_query_sql: String,
    pub widgets: Vec<WidgetState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractRequest {
    pub session: String,
    pub widget_path: Path,
    pub u: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub session: String,
    pub sql: String,
    /// Null when the server has no data source.
    pub columns: Option<Vec<String>>,
    pub rows: Option<Vec<Vec<Value>>>,
}

#[derive(Debug, Deserialize)]
pub struct SessionQuery {
    pub session: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    status: u16,
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: String) -> Self {
        ApiError {
            status: status.as_u16(),
            error: error.into(),
            message,
            domain: None,
        }
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}"))
    }
}

impl From<InteractError> for ApiError {
    fn from(e: InteractError) -> Self {
        let msg = e.to_string();
        match e {
            InteractError::OutOfDomain { domain, .. } => ApiError {
                domain: Some(domain),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "out_of_domain", msg)
            },
            InteractError::InvalidQuery(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_query", msg),
            InteractError::PathInvalid(_) => Self::new(StatusCode::BAD_REQUEST, "path_invalid", msg),
            InteractError::NoWidget(_) => Self::new(StatusCode::BAD_REQUEST, "no_widget", msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

fn state_of(session: String, spec: &InterfaceSpec) -> SessionState {
    SessionState {
        session,
        current_query_sql: spec.current_query_sql.clone(),
        widgets: widget_states(spec),
    }
}

async fn get_spec(State(st): State<Arc<AppState>>, Query(q): Query<SessionQuery>) -> Result<Json<InterfaceSpec>, ApiError> {
    match q.session {
        Some(id) => Ok(Json(st.session(&id)?)),
        None => Ok(Json(st.initial.clone())),
    }
}

async fn new_session(State(st): State<Arc<AppState>>) -> Json<SessionState> {
    let id = format!("s{}", st.next_id.fetch_add(1, Ordering::Relaxed));
    st.sessions.lock().unwrap().insert(id.clone(), st.initial.clone());
    Json(state_of(id, &st.initial))
}

async fn interact(State(st): State<Arc<AppState>>, Json(req): Json<InteractRequest>) -> Result<Json<SessionState>, ApiError> {
    let mut sessions = st.sessions.lock().unwrap();
    let spec = sessions
        .get_mut(&req.session)
        .ok_or_else(|| ApiError::unknown_session(&req.session))?;
    let next = apply_widget(spec, &req.widget_path, &req.u)?;
    *spec = next;
    Ok(Json(state_of(req.session, spec)))
}

async fn result(State(st): State<Arc<AppState>>, Query(q): Query<SessionQuery>) -> Result<Json<QueryResult>, ApiError> {
    let id = q
        .session
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing_session", "session is required".into()))?;
    let spec = st.session(&id)?;
    let (columns, rows) = match &st.data {
        None => (None, None),
        Some(db) => {
            let r = db
                .execute(&spec.current_query_ast)
                .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "execution_failed", e.to_string()))?;
            (Some(r.columns), Some(r.rows))
        }
    };
    Ok(Json(QueryResult {
        session: id,
        sql: spec.current_query_sql,
        columns,
        rows,
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/spec", get(get_spec))
        .route("/session", post(new_session))
        .route("/interact", post(interact))
        .route("/result", get(result))
        .with_state(state)
}

pub async fn serve(state: AppState, port: u16) -> Result<(), CliError> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CliError::Io(format!("bind {addr}: {e}")))?;
    let local = listener.local_addr().map_err(|e| CliError::Io(e.to_string()))?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router(Arc::new(state)))
        .await
        .map_err(|e| CliError::Io(e.to_string()))
}
