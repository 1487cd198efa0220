mod common;

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use glyphplan_core::planner::{plan_via_backend, BackendConfig, PlanError, PlanRequest};
use glyphplan_core::{Canvas, ParseMode};
use glyphplan_service::transport::HttpTransport;
use glyphplan_service::ServiceConfig;
use serde_json::{json, Value};

#[derive(Clone)]
struct Reply {
    delay: Duration,
    status: u16,
    body: String,
}

fn reply(body: &str) -> Reply {
    Reply { delay: Duration::ZERO, status: 200, body: body.to_string() }
}

#[derive(Clone, Default)]
struct Script {
    replies: Arc<Mutex<VecDeque<Reply>>>,
    seen: Arc<Mutex<Vec<Value>>>,
}

async fn chat(State(script): State<Script>, Json(body): Json<Value>) -> (StatusCode, String) {
    script.seen.lock().unwrap().push(body);
    let next = script.replies.lock().unwrap().pop_front().unwrap_or_else(|| reply(r#"{"content":"no more"}"#));
    tokio::time::sleep(next.delay).await;
    (StatusCode::from_u16(next.status).unwrap(), next.body)
}

/// Starts a scripted chat endpoint on its own runtime thread.
fn fake_backend(replies: Vec<Reply>) -> (String, Script) {
    let script = Script { replies: Arc::new(Mutex::new(replies.into())), ..Script::default() };
    let app = Router::new().route("/chat", post(chat)).with_state(script.clone());
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    std_listener.set_nonblocking(true).unwrap();
    let addr = std_listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (format!("http://{addr}/chat"), script)
}

fn unused_endpoint() -> String {
    let addr: SocketAddr = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    format!("http://{addr}/chat")
}

fn config(endpoint: &str, retries: u32, timeout_ms: u64) -> BackendConfig {
    BackendConfig {
        endpoint: endpoint.to_string(),
        timeout: Duration::from_millis(timeout_ms),
        max_retries: retries,
        mode: ParseMode::Strict,
        variant: Default::default(),
    }
}

fn request() -> PlanRequest {
    PlanRequest { prompt: "a poster of \"WILD\"".into(), keywords: None, seed: 0 }
}

#[test]
fn well_formed_reply_becomes_a_layout() {
    let (url, script) = fake_backend(vec![reply(r#"{"content":"WILD 10,20,90,40"}"#)]);
    let plan = plan_via_backend(&request(), &config(&url, 0, 5_000), &HttpTransport::default(), Canvas::default()).unwrap();
    assert_eq!(plan.layout.len(), 1);
    assert_eq!(plan.layout.lines[0].content, "WILD");
    let seen = script.seen.lock().unwrap();
    assert_eq!(seen[0]["messages"][0]["role"], "system");
    assert_eq!(seen[0]["messages"][1]["content"], "Prompt: a poster of \"WILD\"");
}

#[test]
fn openai_style_reply_is_accepted() {
    let body = r#"{"choices":[{"message":{"role":"assistant","content":"WILD 10,20,90,40\nSALE 10,50,90,70"}}]}"#;
    let (url, _) = fake_backend(vec![reply(body)]);
    let plan = plan_via_backend(&request(), &config(&url, 0, 5_000), &HttpTransport::default(), Canvas::default()).unwrap();
    assert_eq!(plan.layout.len(), 2);
}

#[test]
fn malformed_replies_are_retried() {
    let (url, script) = fake_backend(vec![
        reply("not json at all"),
        reply(r#"{"content":"Sure! Here is a layout."}"#),
        reply(r#"{"content":"WILD 10,20,90,40"}"#),
    ]);
    let plan = plan_via_backend(&request(), &config(&url, 2, 5_000), &HttpTransport::default(), Canvas::default()).unwrap();
    assert_eq!(plan.transcript.len(), 3);
    assert_eq!(script.seen.lock().unwrap().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let (url, script) = fake_backend(vec![reply(r#"{"content":"prose"}"#); 5]);
    let err = plan_via_backend(&request(), &config(&url, 1, 5_000), &HttpTransport::default(), Canvas::default()).unwrap_err();
    assert!(matches!(err, PlanError::BackendMalformed { attempts: 2, .. }), "{err:?}");
    assert_eq!(script.seen.lock().unwrap().len(), 2);
}

#[test]
fn slow_backend_times_out() {
    let slow = Reply { delay: Duration::from_secs(3), ..reply(r#"{"content":"WILD 1,2,3,4"}"#) };
    let (url, _) = fake_backend(vec![slow]);
    let err = plan_via_backend(&request(), &config(&url, 0, 200), &HttpTransport::default(), Canvas::default()).unwrap_err();
    assert_eq!(err, PlanError::Timeout);
}

#[test]
fn error_status_is_reported_as_unreachable() {
    let (url, _) = fake_backend(vec![Reply { status: 503, ..reply("overloaded") }]);
    let err = plan_via_backend(&request(), &config(&url, 3, 5_000), &HttpTransport::default(), Canvas::default()).unwrap_err();
    assert!(matches!(&err, PlanError::BackendUnreachable(m) if m.contains("503")), "{err:?}");
}

#[test]
fn closed_port_is_unreachable() {
    let err = plan_via_backend(&request(), &config(&unused_endpoint(), 0, 2_000), &HttpTransport::default(), Canvas::default())
        .unwrap_err();
    assert!(matches!(err, PlanError::BackendUnreachable(_)), "{err:?}");
}

#[tokio::test]
async fn service_maps_backend_failures() {
    let backend = Some(config(&unused_endpoint(), 0, 2_000));
    let app = common::app_with(ServiceConfig { backend, ..ServiceConfig::default() });
    let (status, body) = common::call(&app, "POST", "/v1/plan", Some(&json!({"prompt": "a sign"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body["error"]["code"], "backend_unreachable");

    let (status, body) = common::call(&app, "POST", "/v1/plan", Some(&json!({"prompt": "a sign", "backend": false}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");

    let (url, _) = fake_backend(vec![Reply { delay: Duration::from_secs(3), ..reply("{}") }]);
    let app = common::app_with(ServiceConfig { backend: Some(config(&url, 0, 200)), ..ServiceConfig::default() });
    let (status, body) = common::call(&app, "POST", "/v1/plan", Some(&json!({"prompt": "a sign"}))).await;
    assert_eq!(status, StatusCode::GATEWAY_TIMEOUT);
    assert_eq!(body["error"]["code"], "backend_timeout");

    let (url, _) = fake_backend(vec![reply(r#"{"content":"prose"}"#)]);
    let app = common::app_with(ServiceConfig { backend: Some(config(&url, 0, 5_000)), ..ServiceConfig::default() });
    let (status, body) = common::call(&app, "POST", "/v1/sessions", Some(&json!({"prompt": "a sign"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body["error"]["code"], "backend_malformed");
}
