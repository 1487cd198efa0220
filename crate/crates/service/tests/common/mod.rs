#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use glyphplan_service::{build_state, router, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn app() -> Router {
    app_with(ServiceConfig::default())
}

pub fn app_with(config: ServiceConfig) -> Router {
    router(build_state(&config).unwrap(), &config)
}

pub async fn call_raw(app: &Router, method: &str, path: &str, body: Option<String>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(path);
    let request = match body {
        Some(b) => builder.header("content-type", "application/json").body(Body::from(b)),
        None => builder.body(Body::empty()),
    }
    .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

pub async fn call(app: &Router, method: &str, path: &str, body: Option<&Value>) -> (StatusCode, Value) {
    call_raw(app, method, path, body.map(|b| b.to_string())).await
}

fn is_int_array(v: &Value) -> bool {
    v.as_array().is_some_and(|a| a.iter().all(|x| x.is_i64() || x.is_u64()))
}

fn is_ratio(v: &Value) -> bool {
    v.as_f64().is_some_and(|x| (0.0..=1.0).contains(&x))
}

/// Documented response shapes. Returns a description of the first mismatch.
pub fn check_schema(schema: &str, v: &Value) -> Result<(), String> {
    let fail = |what: &str| Err(format!("{schema}: {what} in {v}"));
    match schema {
        "health" => {
            if v["status"] != "ok" || !v["version"].is_string() {
                return fail("status/version");
            }
        }
        "layout_record" => {
            if !v["prompt"].is_string() || !v["repr"].is_string() || !v["canvas"].is_i64() {
                return fail("prompt/repr/canvas");
            }
            let Some(lines) = v["lines"].as_array() else { return fail("lines") };
            for l in lines {
                if !l["text"].is_string() || !is_int_array(&l["box"]) {
                    return fail("line shape");
                }
            }
        }
        "session_created" => {
            if !v["session_id"].is_string() {
                return fail("session_id");
            }
            check_schema("layout_record", &v["layout"])?;
        }
        "session_state" => {
            check_schema("layout_record", v)?;
            if !v["session_id"].is_string() || !v["seed"].is_u64() {
                return fail("session_id/seed");
            }
            let Some(history) = v["history"].as_array() else { return fail("history") };
            if history.is_empty() || history.iter().any(|h| !h["command"].is_string() || !h["lines"].is_array()) {
                return fail("history entries");
            }
        }
        "edit_reply" => {
            check_schema("layout_record", &v["layout"])?;
            if !v["warnings"].as_array().is_some_and(|w| w.iter().all(Value::is_string)) {
                return fail("warnings");
            }
        }
        "token_record" => {
            if !is_int_array(&v["ids"]) || !v["L"].is_u64() || !v["variant"].is_string() || !v["level"].is_string() {
                return fail("ids/L/variant/level");
            }
            if v["ids"].as_array().unwrap().len() as u64 != v["L"].as_u64().unwrap() {
                return fail("ids length != L");
            }
        }
        "decode_reply" => {
            if !v["prompt"].is_string() {
                return fail("prompt");
            }
            check_schema("layout_record", &v["layout"])?;
        }
        "report" => {
            if !v["records"].is_u64() || v["averaging"] != "micro" {
                return fail("records/averaging");
            }
            for k in ["accuracy", "precision", "recall", "f_measure"] {
                if !is_ratio(&v["keyword"][k]) {
                    return fail(k);
                }
            }
            if !(v["overlap_iou"].is_null() || is_ratio(&v["overlap_iou"])) {
                return fail("overlap_iou");
            }
            let Some(cdf) = v["length_coverage"].as_array() else { return fail("length_coverage") };
            if cdf.iter().any(|c| !c["L"].is_u64() || !is_ratio(&c["coverage"])) {
                return fail("length_coverage rows");
            }
            if !v["per_record"].is_array() {
                return fail("per_record");
            }
        }
        "error" => {
            if !v["error"]["code"].is_string() || !v["error"]["message"].is_string() {
                return fail("error envelope");
            }
        }
        other => return Err(format!("unknown schema {other}")),
    }
    Ok(())
}

/// Runs the golden request suite; returns one line per failure.
pub async fn run_golden_suite(app: &Router) -> (usize, Vec<String>) {
    let cases: Vec<Value> = serde_json::from_str(include_str!("../golden/requests.json")).unwrap();
    let mut failures = Vec::new();
    let mut session = String::new();
    for case in &cases {
        let name = case["name"].as_str().unwrap();
        let path = case["path"].as_str().unwrap().replace("{session}", &session);
        let body = match (&case["raw"], &case["body"]) {
            (Value::String(raw), _) => Some(raw.clone()),
            (_, Value::Null) => None,
            (_, b) => Some(b.to_string()),
        };
        let (status, reply) = call_raw(app, case["method"].as_str().unwrap(), &path, body).await;
        if status.as_u16() as u64 != case["status"].as_u64().unwrap() {
            failures.push(format!("{name}: status {status}, body {reply}"));
            continue;
        }
        let schema = case["schema"].as_str().unwrap_or("error");
        if let Err(e) = check_schema(schema, &reply) {
            failures.push(format!("{name}: {e}"));
            continue;
        }
        if let Some(code) = case["code"].as_str() {
            if reply["error"]["code"] != code {
                failures.push(format!("{name}: code {} != {code}", reply["error"]["code"]));
            }
        }
        if let Some(n) = case["lines"].as_u64() {
            let lines = if schema == "layout_record" { &reply["lines"] } else { &reply["layout"]["lines"] };
            if lines.as_array().map(|a| a.len() as u64) != Some(n) {
                failures.push(format!("{name}: expected {n} lines, got {reply}"));
            }
        }
        if let Some(l) = case["L"].as_u64() {
            if reply["L"].as_u64() != Some(l) {
                failures.push(format!("{name}: expected L {l}"));
            }
        }
        if schema == "session_created" {
            session = reply["session_id"].as_str().unwrap().to_string();
        }
    }
    (cases.len(), failures)
}
