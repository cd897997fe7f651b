//! Create the HOU scenario through the HTTP API and run a what-if
//! projection with a higher first-year dropout. Requests go straight to the
//! router; with `--serve` the same router then listens on 127.0.0.1:8080.

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use coursepop::fixtures::HOU_SOURCE;
use coursepop::scenario::{router, serve, AppState, ScenarioStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn post(app: &Router, uri: &str, body: Option<Value>) -> Value {
    let body = body.map(|b| b.to_string()).unwrap_or_default();
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap()
}

#[tokio::main]
async fn main() {
    let dir = std::env::temp_dir().join(format!("coursepop-example-{}", std::process::id()));
    let app = router(AppState::new(ScenarioStore::open(&dir).unwrap()));

    let created = post(
        &app,
        "/scenarios",
        Some(json!({
            "name": "hou",
            "curriculum_source": HOU_SOURCE,
            "schedule": {"intakes": {"2024": 100, "2025": 120, "2026": 90}},
            "horizon": 8
        })),
    )
    .await;
    let id = created["id"].as_str().unwrap().to_string();
    println!("created {id} version {}", created["version"]);

    let uri = format!("/scenarios/{id}/project");
    let base = post(&app, &uri, None).await;
    let what_if = post(
        &app,
        &uri,
        Some(json!({
            "mode": "renormalize",
            "assignment": [{"from_state_id": "active:50/50", "outcome": "dropout", "probability": 0.5}]
        })),
    )
    .await;
    let dropout = |r: &Value| {
        let i = r["states"]
            .as_array()
            .unwrap()
            .iter()
            .position(|s| s == "dropout")
            .unwrap();
        r["years"].as_array().unwrap().last().unwrap()["population"][i]
            .as_f64()
            .unwrap()
    };
    println!(
        "dropouts by the horizon: {:.1} -> {:.1}",
        dropout(&base),
        dropout(&what_if)
    );

    if std::env::args().any(|a| a == "--serve") {
        println!("serving on http://127.0.0.1:8080 (store {})", dir.display());
        serve(
            ([127, 0, 0, 1], 8080).into(),
            ScenarioStore::open(&dir).unwrap(),
        )
        .await
        .unwrap();
    }
    std::fs::remove_dir_all(&dir).ok();
}
