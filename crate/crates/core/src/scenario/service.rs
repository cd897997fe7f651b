use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::core::{
    prepare, run_projection, run_simulation, Overrides, Prepared, SimulationRequest,
};
use super::store::{ScenarioStore, StoreError};
use super::{AssignmentEntry, Scenario, ScenarioError, ScenarioInput};
use crate::graph::aggregate_graph;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ScenarioStore>,
}

impl AppState {
    pub fn new(store: ScenarioStore) -> Self {
        AppState {
            store: Arc::new(store),
        }
    }
}

/// `POST/GET /scenarios`, `GET/PUT/DELETE /scenarios/{id}`,
/// `POST /scenarios/{id}/project`, `POST /scenarios/{id}/simulate`,
/// `GET /scenarios/{id}/graph?view=refined|aggregate[&format=dot]`.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scenarios", post(create).get(list))
        .route("/scenarios/{id}", get(read).put(update).delete(remove))
        .route("/scenarios/{id}/project", post(project))
        .route("/scenarios/{id}/simulate", post(simulate))
        .route("/scenarios/{id}/graph", get(graph))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, store: ScenarioStore) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(store))).await
}

struct ApiError(StatusCode, ScenarioError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match &e {
            StoreError::NotFound(_) => (StatusCode::NOT_FOUND, "not-found"),
            StoreError::Conflict { .. } => (StatusCode::CONFLICT, "version-conflict"),
            StoreError::Io(_) | StoreError::Corrupt(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "store-failure")
            }
        };
        ApiError(status, ScenarioError::new(code, e.to_string()))
    }
}

fn invalid(e: ScenarioError) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, e)
}

/// Empty bodies decode as `T::default()` when a default is given.
fn body<T: DeserializeOwned>(bytes: &Bytes, default: Option<T>) -> Result<T, ApiError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        if let Some(d) = default {
            return Ok(d);
        }
    }
    serde_json::from_slice(bytes).map_err(|e| {
        ApiError(
            StatusCode::BAD_REQUEST,
            ScenarioError::new("malformed-request", e.to_string()),
        )
    })
}

/// Validates the input and fills in a default assignment.
fn validated(mut input: ScenarioInput) -> Result<ScenarioInput, ApiError> {
    let assignment = match &input.assignment {
        Some(entries) => Some(AssignmentEntry::to_assignment(entries).map_err(invalid)?),
        None => None,
    };
    let p = prepare(
        &input.curriculum_source,
        assignment,
        input.schedule.clone(),
        input.horizon,
    )
    .map_err(invalid)?;
    input.assignment = Some(AssignmentEntry::from_assignment(&p.assignment));
    Ok(input)
}

fn prepared(s: &Scenario) -> Result<Prepared, ApiError> {
    let a = AssignmentEntry::to_assignment(&s.assignment).map_err(invalid)?;
    prepare(&s.curriculum_source, Some(a), s.schedule.clone(), s.horizon).map_err(invalid)
}

async fn create(State(st): State<AppState>, bytes: Bytes) -> Result<Response, ApiError> {
    let input = validated(body(&bytes, None)?)?;
    let s = st.store.create(input)?;
    Ok((StatusCode::CREATED, Json(s)).into_response())
}

async fn list(State(st): State<AppState>) -> Result<Json<Vec<Scenario>>, ApiError> {
    Ok(Json(st.store.list()?))
}

async fn read(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Scenario>, ApiError> {
    Ok(Json(st.store.get(&id)?))
}

/// An update body is a create body plus `expected_version`.
fn update_request(bytes: &Bytes) -> Result<(u64, ScenarioInput), ApiError> {
    let malformed = |m: String| {
        ApiError(
            StatusCode::BAD_REQUEST,
            ScenarioError::new("malformed-request", m),
        )
    };
    let mut value: serde_json::Value = body(bytes, None)?;
    let version = value
        .as_object_mut()
        .and_then(|o| o.remove("expected_version"))
        .ok_or_else(|| malformed("missing field `expected_version`".into()))?;
    let version = version
        .as_u64()
        .ok_or_else(|| malformed("`expected_version` must be a non-negative integer".into()))?;
    let input = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    Ok((version, input))
}

async fn update(
    State(st): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<Json<Scenario>, ApiError> {
    let (expected_version, input) = update_request(&bytes)?;
    st.store.get(&id)?;
    let input = validated(input)?;
    Ok(Json(st.store.update(&id, expected_version, input)?))
}

async fn remove(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    st.store.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn project(
    State(st): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<Response, ApiError> {
    let overrides: Overrides = body(&bytes, Some(Overrides::default()))?;
    let p = prepared(&st.store.get(&id)?)?;
    let report = tokio::task::spawn_blocking(move || run_projection(&p, &overrides))
        .await
        .expect("projection task")
        .map_err(invalid)?;
    Ok(Json(report).into_response())
}

async fn simulate(
    State(st): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<Response, ApiError> {
    let req: SimulationRequest = body(&bytes, None)?;
    let p = prepared(&st.store.get(&id)?)?;
    let result = tokio::task::spawn_blocking(move || run_simulation(&p, &req))
        .await
        .expect("simulation task")
        .map_err(invalid)?;
    Ok(Json(result).into_response())
}

#[derive(Deserialize)]
struct GraphQuery {
    #[serde(default)]
    view: Option<String>,
    #[serde(default)]
    format: Option<String>,
}

async fn graph(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<GraphQuery>,
) -> Result<Response, ApiError> {
    let p = prepared(&st.store.get(&id)?)?;
    let dot = match q.format.as_deref() {
        None | Some("json") => false,
        Some("dot") => true,
        Some(other) => {
            return Err(invalid(ScenarioError::new(
                "invalid-query",
                format!("unknown format {other:?}"),
            )))
        }
    };
    let dot_response =
        |text: String| ([(header::CONTENT_TYPE, "text/vnd.graphviz")], text).into_response();
    match q.view.as_deref() {
        None | Some("refined") if dot => Ok(dot_response(p.graph.to_dot())),
        None | Some("refined") => Ok(Json(&p.graph).into_response()),
        Some("aggregate") if dot => Ok(dot_response(aggregate_graph(&p.graph).to_dot())),
        Some("aggregate") => Ok(Json(aggregate_graph(&p.graph)).into_response()),
        Some(other) => Err(invalid(ScenarioError::new(
            "invalid-query",
            format!("unknown view {other:?}"),
        ))),
    }
}
