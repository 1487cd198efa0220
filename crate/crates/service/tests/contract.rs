mod common;

use axum::http::StatusCode;
use common::{app, app_with, call, call_raw, check_schema, run_golden_suite};
use glyphplan_service::ServiceConfig;
use serde_json::json;

#[tokio::test]
async fn golden_request_suite() {
    let (total, failures) = run_golden_suite(&app()).await;
    assert!(total > 30);
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[tokio::test]
async fn encode_then_decode_restores_the_layout() {
    let app = app();
    let (status, plan) = call(&app, "POST", "/v1/plan", Some(&json!({"prompt": "a poster that says \"OPEN LATE\""}))).await;
    assert_eq!(status, StatusCode::OK);
    let record = json!({"prompt": plan["prompt"], "lines": plan["lines"], "repr": plan["repr"], "canvas": plan["canvas"]});
    let (status, tokens) = call(&app, "POST", "/v1/encode", Some(&json!({"prompt": plan["prompt"], "layout": record, "level": "char"}))).await;
    assert_eq!(status, StatusCode::OK, "{tokens}");
    check_schema("token_record", &tokens).unwrap();
    let (status, decoded) = call(&app, "POST", "/v1/decode", Some(&tokens)).await;
    assert_eq!(status, StatusCode::OK, "{decoded}");
    check_schema("decode_reply", &decoded).unwrap();
    assert_eq!(decoded["prompt"], plan["prompt"]);
    assert_eq!(decoded["layout"]["lines"], plan["lines"]);
}

#[tokio::test]
async fn oversized_body_is_rejected() {
    let config = ServiceConfig { body_limit: 64, ..ServiceConfig::default() };
    let app = app_with(config);
    let body = json!({"prompt": "x".repeat(200)});
    let (status, reply) = call(&app, "POST", "/v1/plan", Some(&body)).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(reply["error"]["code"], "payload_too_large");
}

#[tokio::test]
async fn missing_content_type_is_rejected() {
    let app = app();
    let request = axum::http::Request::builder()
        .method("POST")
        .uri("/v1/plan")
        .body(axum::body::Body::from(r#"{"prompt":"a sign"}"#))
        .unwrap();
    let response = tower::ServiceExt::oneshot(app, request).await.unwrap();
    assert_eq!(response.status(), StatusCode::UNSUPPORTED_MEDIA_TYPE);
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig { snapshot: Some(dir.path().join("sessions.json")), ..ServiceConfig::default() };
    let first = app_with(config.clone());
    let (status, created) = call(&first, "POST", "/v1/sessions", Some(&json!({"prompt": "a sign reading \"EXIT\"", "seed": 3}))).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_string();
    let (status, _) = call(&first, "POST", &format!("/v1/sessions/{id}/edit"), Some(&json!({"command": "move 0 4 -2"}))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, before) = call(&first, "GET", &format!("/v1/sessions/{id}"), None).await;
    drop(first);

    let second = app_with(config);
    let (status, after) = call(&second, "GET", &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    let (status, undone) = call(&second, "POST", &format!("/v1/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(undone["layout"]["lines"], created["layout"]["lines"]);
}

#[tokio::test]
async fn serves_static_ui_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>editor</html>").unwrap();
    let config = ServiceConfig { ui_dir: Some(dir.path().to_path_buf()), ..ServiceConfig::default() };
    let app = app_with(config);
    let request = axum::http::Request::builder().uri("/ui/index.html").body(axum::body::Body::empty()).unwrap();
    let response = tower::ServiceExt::oneshot(app.clone(), request).await.unwrap();
    assert_eq!(response.status(), StatusCode::OK);
    let body = http_body_util::BodyExt::collect(response.into_body()).await.unwrap().to_bytes();
    assert_eq!(&body[..], b"<html>editor</html>");

    let (status, _) = call_raw(&common::app(), "GET", "/ui/index.html", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
