use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use coursepop::fixtures::{HOU_SOURCE, TINY_SOURCE};
use coursepop::scenario::{router, AppState, ScenarioStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &tempfile::TempDir) -> Router {
    router(AppState::new(ScenarioStore::open(dir.path()).unwrap()))
}

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value, String) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    (
        status,
        serde_json::from_str(&text).unwrap_or(Value::Null),
        text,
    )
}

fn hou_input() -> Value {
    json!({
        "name": "hou",
        "curriculum_source": HOU_SOURCE,
        "schedule": {"intakes": {"2024": 100.0, "2025": 120.0}},
        "horizon": 6
    })
}

#[tokio::test]
async fn create_read_update_delete() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let (status, created, _) = call(&app, "POST", "/scenarios", Some(hou_input())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["version"], 1);
    let id = created["id"].as_str().unwrap().to_string();
    assert!(!created["assignment"].as_array().unwrap().is_empty());

    let (status, got, _) = call(&app, "GET", &format!("/scenarios/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(got, created);

    let mut update = hou_input();
    update["expected_version"] = json!(1);
    update["name"] = json!("renamed");
    let (status, v2, _) = call(
        &app,
        "PUT",
        &format!("/scenarios/{id}"),
        Some(update.clone()),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        (v2["version"].as_u64(), v2["name"].as_str()),
        (Some(2), Some("renamed"))
    );

    let (status, err, _) = call(&app, "PUT", &format!("/scenarios/{id}"), Some(update)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "version-conflict");

    let (_, list, _) = call(&app, "GET", "/scenarios", None).await;
    assert_eq!(list.as_array().unwrap().len(), 1);

    let (status, _, _) = call(&app, "DELETE", &format!("/scenarios/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, err, _) = call(&app, "GET", &format!("/scenarios/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not-found");
}

#[tokio::test]
async fn validation_errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let mut input = hou_input();
    input["curriculum_source"] = json!(TINY_SOURCE.replace(
        "rule max_per_year 1",
        "rule max_per_year 1\nconstraint hard B -> A"
    ));
    let (status, err, _) = call(&app, "POST", "/scenarios", Some(input)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "invalid-curriculum");
    assert!(err["details"]
        .as_array()
        .unwrap()
        .iter()
        .any(|d| d.as_str().unwrap().contains("cycle")));

    let mut input = hou_input();
    input["schedule"] = json!({"intakes": {"2024": -5.0}});
    let (status, err, _) = call(&app, "POST", "/scenarios", Some(input)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "invalid-schedule");

    let (status, err, _) = call(&app, "POST", "/scenarios", Some(json!({"name": 3}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "malformed-request");

    let (status, _, _) = call(&app, "POST", "/scenarios/sc-000099/project", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[tokio::test]
async fn graph_views() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let (_, created, _) = call(&app, "POST", "/scenarios", Some(hou_input())).await;
    let id = created["id"].as_str().unwrap();

    let (status, refined, _) = call(&app, "GET", &format!("/scenarios/{id}/graph"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(refined["states"].as_array().unwrap().len(), 22);
    let (_, aggregate, _) = call(
        &app,
        "GET",
        &format!("/scenarios/{id}/graph?view=aggregate"),
        None,
    )
    .await;
    assert_eq!(aggregate["states"].as_array().unwrap().len(), 10);
    let (status, _, dot) = call(
        &app,
        "GET",
        &format!("/scenarios/{id}/graph?view=aggregate&format=dot"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(dot.starts_with("digraph"));
    let (status, _, _) = call(
        &app,
        "GET",
        &format!("/scenarios/{id}/graph?view=sideways"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn what_if_projection_leaves_scenario_alone() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let (_, created, _) = call(&app, "POST", "/scenarios", Some(hou_input())).await;
    let id = created["id"].as_str().unwrap();
    let uri = format!("/scenarios/{id}/project");

    let (status, base, _) = call(&app, "POST", &uri, None).await;
    assert_eq!(status, StatusCode::OK);
    let dropout = base["states"]
        .as_array()
        .unwrap()
        .iter()
        .position(|s| s == "dropout")
        .unwrap();

    let overrides = json!({
        "mode": "renormalize",
        "assignment": [{"from_state_id": "active:50/50", "outcome": "dropout", "probability": 0.6}]
    });
    let (status, what_if, _) = call(&app, "POST", &uri, Some(overrides.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let last = |r: &Value| {
        r["years"].as_array().unwrap().last().unwrap()["population"][dropout]
            .as_f64()
            .unwrap()
    };
    assert!(last(&what_if) > last(&base));
    let row: f64 = what_if["effective_assignment"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["from_state_id"] == "active:50/50")
        .map(|e| e["probability"].as_f64().unwrap())
        .sum();
    assert!((row - 1.0).abs() < 1e-9);

    let (_, again, _) = call(&app, "POST", &uri, None).await;
    assert_eq!(again, base);
    let (_, stored, _) = call(&app, "GET", &format!("/scenarios/{id}"), None).await;
    assert_eq!(stored["version"], 1);

    let mut strict = overrides;
    strict["mode"] = json!("strict");
    let (status, err, _) = call(&app, "POST", &uri, Some(strict)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "invalid-overrides");
}

#[tokio::test]
async fn simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let (_, created, _) = call(&app, "POST", "/scenarios", Some(hou_input())).await;
    let uri = format!("/scenarios/{}/simulate", created["id"].as_str().unwrap());
    let req = json!({"replicas": 500, "seed": 7});
    let (status, a, _) = call(&app, "POST", &uri, Some(req.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b, _) = call(&app, "POST", &uri, Some(req)).await;
    assert_eq!(a, b);
    assert_eq!(a["years"].as_array().unwrap().len(), 6);

    let (status, err, _) = call(&app, "POST", &uri, Some(json!({"replicas": 0}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "invalid-simulation");
}
