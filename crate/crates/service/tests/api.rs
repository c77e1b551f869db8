mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use conceptrank_service::api::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> (Router, conceptrank::synth::Fixture) {
    let f = common::fixture();
    (router(Arc::new(common::manager(&f)), None), f)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

#[tokio::test]
async fn full_interaction() {
    let (app, f) = app();
    let (status, session) = call(&app, Method::POST, "/api/sessions", Some(json!({"query": f.topics[0].text}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(session["step"], "SLATE_SHOWN");
    let id = session["session_id"].as_str().unwrap().to_string();
    let slate = session["slate"].as_array().unwrap();
    assert!(!slate.is_empty());

    let (status, page) = call(&app, Method::GET, &format!("/api/sessions/{id}/results?offset=0&limit=5"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["items"].as_array().unwrap().len(), 5);
    assert_eq!(page["step"], "SLATE_SHOWN");

    let pick = slate[0]["concept_id"].clone();
    let (status, after) = call(&app, Method::POST, &format!("/api/sessions/{id}/feedback"), Some(json!({"selected": [pick]}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after["step"], "RERANKED");
    assert_eq!(after["selected"], json!([pick]));

    let (_, page) = call(&app, Method::GET, &format!("/api/sessions/{id}/results"), None).await;
    let items = page["items"].as_array().unwrap();
    assert_eq!(items.len(), 10);
    assert_eq!(items[0]["rank"], 1);
    for key in ["doc_id", "title", "snippet", "score"] {
        assert!(!items[0][key].is_null(), "missing {key}");
    }

    let (status, full) = call(&app, Method::GET, &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(full, after);
}

#[tokio::test]
async fn error_responses() {
    let (app, f) = app();
    let (status, err) = call(&app, Method::POST, "/api/sessions", Some(json!({"query": "the of"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err, json!({"code": "empty_query", "message": "empty query"}));

    let (status, err) = call(&app, Method::GET, "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
    let (status, _) = call(&app, Method::GET, "/api/sessions/nope/results", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::POST, "/api/sessions/nope/feedback", Some(json!({"selected": []}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, s) = call(&app, Method::POST, "/api/sessions", Some(json!({"query": f.topics[0].text}))).await;
    let id = s["session_id"].as_str().unwrap();
    let (status, err) = call(&app, Method::POST, &format!("/api/sessions/{id}/feedback"), Some(json!({"selected": ["not-a-concept"]}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "validation");

    let (status, _) = call(&app, Method::POST, &format!("/api/sessions/{id}/feedback"), Some(json!({"selected": []}))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, err) = call(&app, Method::POST, &format!("/api/sessions/{id}/feedback"), Some(json!({"selected": []}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "conflict");
}

#[tokio::test]
async fn static_assets_are_served_next_to_the_api() {
    let f = common::fixture();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>ui</h1>").unwrap();
    let app = router(Arc::new(common::manager(&f)), Some(dir.path()));
    let resp = app.clone().oneshot(Request::get("/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let (status, _) = call(&app, Method::GET, "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
