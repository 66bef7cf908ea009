//! HTTP/JSON API over in-memory sessions.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | `{"tree": {...}}` or `{"schema": [...], "csv": "...", "label": "col", "max_depth": 5, "min_leaf": 1}`, optional `"node_limit"` |
//! | POST | `/sessions/{id}/instances` | `{"name", "features": {...}, "label", "minconf"}` |
//! | POST | `/sessions/{id}/constraints` | `{"text"}` |
//! | DELETE | `/sessions/{id}/constraints/{cid}` | |
//! | POST | `/sessions/{id}/retract` | `{"text"}` |
//! | POST | `/sessions/{id}/solveopt` | `{"minimize", "project", "verbose"}` |
//! | GET | `/sessions/{id}/paths` | |
//! | GET | `/sessions/{id}/regions/{instance}` | |
//! | GET | `/sessions/{id}/transcript` | |
//!
//! Every response carries the session `version`; a mutating request with an
//! `If-Match` header naming another version is rejected with 409.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use contrafact::rational::{format_confidence, to_exact_string};
use contrafact::schema::FeatureSchema;
use contrafact::session::{result_json, Session, SessionError};
use contrafact::tree::{
    render_rule, train_cart, CartParams, Dataset, DecisionTree, TEMPLATE_INSTANCE,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::script::{Command, ExecError, Executor, Outcome, RetractTarget};

pub struct SessionHandle {
    pub id: String,
    pub created_at: u64,
    entry: Mutex<Entry>,
}

struct Entry {
    executor: Executor,
    version: u64,
}

#[derive(Default, Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<SessionHandle>>>>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/instances", post(declare_instance))
        .route("/sessions/{id}/constraints", post(add_constraint))
        .route("/sessions/{id}/constraints/{cid}", delete(retract_id))
        .route("/sessions/{id}/retract", post(retract_text))
        .route("/sessions/{id}/solveopt", post(solveopt))
        .route("/sessions/{id}/paths", get(paths))
        .route("/sessions/{id}/regions/{instance}", get(regions))
        .route("/sessions/{id}/transcript", get(transcript))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({"error": message.into()}),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<ExecError> for ApiError {
    fn from(e: ExecError) -> Self {
        let message = e.to_string();
        match e {
            ExecError::Session(SessionError::Parse { error, .. }) => ApiError {
                status: StatusCode::BAD_REQUEST,
                body: json!({"error": message, "position": error.position}),
            },
            ExecError::Session(SessionError::ConstraintNotFound(_)) => {
                ApiError::new(StatusCode::NOT_FOUND, message)
            }
            _ => ApiError::new(StatusCode::BAD_REQUEST, message),
        }
    }
}

type ApiResult = Result<(StatusCode, Json<Value>), ApiError>;

impl AppState {
    fn handle(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session `{id}`")))
    }
}

fn expected_version(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    match headers.get("if-match") {
        None => Ok(None),
        Some(v) => v
            .to_str()
            .ok()
            .map(|s| s.trim().trim_matches('"'))
            .and_then(|s| s.parse().ok())
            .map(Some)
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "If-Match must be a session version",
                )
            }),
    }
}

/// Runs a command under the session lock on the blocking pool.
async fn run_command(
    state: &AppState,
    id: &str,
    headers: &HeaderMap,
    cmd: Command,
    mutates: bool,
) -> Result<(Outcome, u64), ApiError> {
    let handle = state.handle(id)?;
    let expected = expected_version(headers)?;
    tokio::task::spawn_blocking(move || {
        let mut entry = handle.entry.lock().expect("session lock");
        if mutates {
            if let Some(v) = expected {
                if v != entry.version {
                    return Err(ApiError {
                        status: StatusCode::CONFLICT,
                        body: json!({"error": "session was modified", "version": entry.version}),
                    });
                }
            }
        }
        let outcome = entry.executor.run(&cmd)?;
        if mutates {
            entry.version += 1;
        }
        Ok((outcome, entry.version))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Deserialize)]
struct CreateBody {
    tree: Option<Value>,
    schema: Option<Value>,
    csv: Option<String>,
    label: Option<String>,
    max_depth: Option<usize>,
    min_leaf: Option<usize>,
    node_limit: Option<usize>,
}

fn build_tree(body: &CreateBody) -> Result<(DecisionTree, Vec<String>), ApiError> {
    let bad = |e: &dyn std::fmt::Display| ApiError::new(StatusCode::BAD_REQUEST, e.to_string());
    if let Some(doc) = &body.tree {
        let loaded = DecisionTree::from_json(&doc.to_string()).map_err(|e| bad(&e))?;
        return Ok((loaded.tree, loaded.warnings));
    }
    let (Some(schema), Some(csv), Some(label)) = (&body.schema, &body.csv, &body.label) else {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "give `tree`, or `schema`, `csv` and `label`",
        ));
    };
    let schema: FeatureSchema = serde_json::from_value(schema.clone()).map_err(|e| bad(&e))?;
    let data = Dataset::from_csv(csv.as_bytes(), &schema, label).map_err(|e| bad(&e))?;
    let defaults = CartParams::default();
    let params = CartParams {
        max_depth: body.max_depth.unwrap_or(defaults.max_depth),
        min_leaf: body.min_leaf.unwrap_or(defaults.min_leaf),
    };
    Ok((
        train_cart(&data, &schema, params).map_err(|e| bad(&e))?,
        Vec::new(),
    ))
}

async fn create_session(State(state): State<AppState>, Json(body): Json<CreateBody>) -> ApiResult {
    let node_limit = body.node_limit;
    let (tree, warnings) = tokio::task::spawn_blocking(move || build_tree(&body))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let mut session = Session::new(tree);
    session.set_node_limit(node_limit);
    let paths = session.paths().len();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let created_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let handle = SessionHandle {
        id: id.clone(),
        created_at,
        entry: Mutex::new(Entry {
            executor: Executor::with_session(session),
            version: 0,
        }),
    };
    state
        .sessions
        .write()
        .expect("session table lock")
        .insert(id.clone(), Arc::new(handle));
    Ok((
        StatusCode::CREATED,
        Json(
            json!({"session_id": id, "created_at": created_at, "paths": paths, "warnings": warnings, "version": 0}),
        ),
    ))
}

#[derive(Deserialize)]
struct InstanceBody {
    name: String,
    #[serde(default)]
    features: serde_json::Map<String, Value>,
    label: Option<String>,
    minconf: Option<Value>,
}

/// Feature values and `minconf` may be JSON strings or numbers.
fn scalar_text(v: &Value) -> Result<String, ApiError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("expected a string or number, got {v}"),
        )),
    }
}

async fn declare_instance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<InstanceBody>,
) -> ApiResult {
    let features = body
        .features
        .iter()
        .map(|(k, v)| Ok((k.clone(), scalar_text(v)?)))
        .collect::<Result<Vec<_>, ApiError>>()?;
    let minconf = body.minconf.as_ref().map(scalar_text).transpose()?;
    let cmd = Command::Instance {
        name: body.name.clone(),
        features,
        label: body.label,
        minconf,
    };
    let (_, version) = run_command(&state, &id, &headers, cmd, true).await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({"name": body.name, "version": version})),
    ))
}

#[derive(Deserialize)]
struct TextBody {
    text: String,
}

async fn add_constraint(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<TextBody>,
) -> ApiResult {
    let cmd = Command::Constraint {
        text: body.text.trim().to_string(),
    };
    let (outcome, version) = run_command(&state, &id, &headers, cmd, true).await?;
    let Outcome::Added { id: cid } = outcome else {
        unreachable!("constraint command adds")
    };
    Ok((
        StatusCode::CREATED,
        Json(json!({"id": cid, "text": body.text.trim(), "version": version})),
    ))
}

fn retracted_json(outcome: Outcome, version: u64) -> Json<Value> {
    let Outcome::Retracted(c) = outcome else {
        unreachable!("retract command retracts")
    };
    Json(json!({"id": c.id, "text": c.text, "version": version}))
}

async fn retract_id(
    State(state): State<AppState>,
    Path((id, cid)): Path<(String, u64)>,
    headers: HeaderMap,
) -> ApiResult {
    let cmd = Command::Retract {
        target: RetractTarget::Id(cid),
    };
    let (outcome, version) = run_command(&state, &id, &headers, cmd, true).await?;
    Ok((StatusCode::OK, retracted_json(outcome, version)))
}

async fn retract_text(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<TextBody>,
) -> ApiResult {
    let cmd = Command::Retract {
        target: RetractTarget::Text(body.text.trim().to_string()),
    };
    let (outcome, version) = run_command(&state, &id, &headers, cmd, true).await?;
    Ok((StatusCode::OK, retracted_json(outcome, version)))
}

#[derive(Deserialize)]
struct SolveBody {
    minimize: Option<String>,
    project: Option<Vec<String>>,
    verbose: Option<u8>,
}

async fn solveopt(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<SolveBody>,
) -> ApiResult {
    let verbose = body.verbose.unwrap_or(1);
    if verbose > 2 {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "verbose must be 0, 1 or 2",
        ));
    }
    let cmd = Command::Solveopt {
        minimize: body.minimize,
        project: body.project,
        verbose,
    };
    let (outcome, version) = run_command(&state, &id, &headers, cmd, false).await?;
    let rendered = outcome.text();
    let Outcome::Solved { result, .. } = outcome else {
        unreachable!("solveopt solves")
    };
    let mut value = result_json(&result);
    value["rendered"] = json!(rendered);
    value["version"] = json!(version);
    let status = if result.failures.is_empty() {
        StatusCode::OK
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    Ok((status, Json(value)))
}

async fn paths(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let handle = state.handle(&id)?;
    let entry = handle.entry.lock().expect("session lock");
    let session = entry
        .executor
        .session()
        .expect("HTTP sessions always hold a tree");
    let paths: Vec<Value> = session
        .paths()
        .iter()
        .map(|p| {
            let atoms: Vec<String> = p
                .atoms
                .iter()
                .map(|a| {
                    contrafact::constraint::render_atom(
                        a,
                        &contrafact::constraint::VarOrder::default(),
                    )
                })
                .collect();
            json!({
                "path_id": p.path_id,
                "rule": render_rule(p, session.schema(), TEMPLATE_INSTANCE),
                "atoms": atoms,
                "class": p.class_label,
                "confidence": to_exact_string(&p.confidence),
                "confidence_rounded": format_confidence(&p.confidence),
                "support": p.support,
            })
        })
        .collect();
    Ok((
        StatusCode::OK,
        Json(json!({"paths": paths, "version": entry.version})),
    ))
}

async fn regions(
    State(state): State<AppState>,
    Path((id, instance)): Path<(String, String)>,
    headers: HeaderMap,
) -> ApiResult {
    let (outcome, version) =
        run_command(&state, &id, &headers, Command::Regions { instance }, false).await?;
    let Outcome::Regions(mut value) = outcome else {
        unreachable!("regions command")
    };
    value["version"] = json!(version);
    Ok((StatusCode::OK, Json(value)))
}

async fn transcript(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let handle = state.handle(&id)?;
    let entry = handle.entry.lock().expect("session lock");
    Ok((
        StatusCode::OK,
        Json(json!({
            "session_id": handle.id,
            "created_at": handle.created_at,
            "text": entry.executor.transcript(),
            "version": entry.version,
        })),
    ))
}
