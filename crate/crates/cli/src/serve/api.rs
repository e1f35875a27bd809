use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use super::store::{GraphEdit, LayoutEdit, ResolveRequest, StatusChange, Store, StoreError};
use crate::commands::load_results;

pub type App = Arc<Store>;

impl IntoResponse for StoreError {
    fn into_response(self) -> Response {
        let (code, body) = match &self {
            StoreError::NotFound(_) => (StatusCode::NOT_FOUND, json!({ "error": self.to_string() })),
            StoreError::Conflict { current, .. } => (
                StatusCode::CONFLICT,
                json!({ "error": self.to_string(), "current_version": current }),
            ),
            StoreError::Invalid { message, diagnostics } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": message, "diagnostics": diagnostics }),
            ),
            StoreError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": self.to_string() })),
        };
        (code, Json(body)).into_response()
    }
}

type Reply = Result<Json<Value>, StoreError>;

fn to_value(v: impl serde::Serialize) -> Json<Value> {
    Json(serde_json::to_value(v).expect("view serializes"))
}

async fn list(State(app): State<App>) -> Json<Value> {
    to_value(app.summaries())
}

async fn show(State(app): State<App>, Path(id): Path<String>) -> Reply {
    app.view(&id).map(to_value)
}

async fn edit_layout(State(app): State<App>, Path(id): Path<String>, Json(edit): Json<LayoutEdit>) -> Reply {
    app.edit_layout(&id, &edit).map(to_value)
}

async fn edit_graph(State(app): State<App>, Path(id): Path<String>, Json(edit): Json<GraphEdit>) -> Reply {
    app.edit_graph(&id, &edit).map(to_value)
}

async fn resolve(State(app): State<App>, Path(id): Path<String>, Json(req): Json<ResolveRequest>) -> Reply {
    app.resolve(&id, &req).map(to_value)
}

async fn set_status(State(app): State<App>, Path(id): Path<String>, Json(change): Json<StatusChange>) -> Reply {
    app.set_status(&id, &change).map(to_value)
}

async fn catalog(State(app): State<App>) -> Reply {
    app.config()
        .catalog()
        .map(to_value)
        .map_err(|e| StoreError::Io(e.to_string()))
}

async fn report(State(app): State<App>) -> Reply {
    if !app.run().results().exists() {
        return Err(StoreError::NotFound("report; run `evaluate` first".into()));
    }
    let results = load_results(app.run()).map_err(|e| StoreError::Io(e.to_string()))?;
    let scenarios = app.run().load_scenarios().map_err(|e| StoreError::Io(e.to_string()))?;
    tabletask_core::eval::report(&results, &scenarios)
        .map(to_value)
        .map_err(|e| StoreError::Io(e.to_string()))
}

pub fn router(app: App) -> Router {
    Router::new()
        .route("/scenarios", get(list))
        .route("/scenarios/{id}", get(show))
        .route("/scenarios/{id}/layout", post(edit_layout))
        .route("/scenarios/{id}/graph", post(edit_graph))
        .route("/scenarios/{id}/resolve", post(resolve))
        .route("/scenarios/{id}/status", post(set_status))
        .route("/catalog", get(catalog))
        .route("/report", get(report))
        .with_state(app)
}
