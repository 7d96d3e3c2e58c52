//! HTTP contract of the session service.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use serde_json::Value;
use teachlens_core::config::AnalysisConfig;
use teachlens_core::pipeline::{analyze_session, write_artifacts};
use teachlens_core::synth::{generate, Scenario};
use teachlens_service::{router, AppState, ServiceConfig};
use tower::ServiceExt;

struct Fixture {
    _root: tempfile::TempDir,
    data: PathBuf,
}

fn analyzed(data: &Path, id: &str, scenario: Scenario) {
    let dir = data.join(id);
    generate(scenario, 5, &dir).unwrap();
    let artifacts = analyze_session(&dir, &AnalysisConfig::default()).unwrap();
    write_artifacts(&artifacts, &dir, false).unwrap();
}

/// `lecture` (130 s, analyzed), `still` (analyzed, media removed),
/// `broken` (corrupt summary) and `raw` (never analyzed).
fn fixture() -> Fixture {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    analyzed(&data, "lecture", Scenario::LectureAudio);
    analyzed(&data, "still", Scenario::Stationary);
    std::fs::remove_file(data.join("still/audio.wav")).unwrap();
    analyzed(&data, "broken", Scenario::Crossing);
    std::fs::write(data.join("broken/summary.json"), "{ not json").unwrap();
    generate(Scenario::Crossing, 1, &data.join("raw")).unwrap();
    std::fs::create_dir_all(data.join("not-a-session")).unwrap();
    Fixture { _root: root, data }
}

fn app(data: &Path, static_dir: Option<PathBuf>) -> Router {
    router(AppState::new(ServiceConfig { data_dir: data.to_path_buf(), static_dir }).unwrap())
}

async fn send(app: &Router, method: Method, uri: &str, range: Option<&str>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(r) = range {
        req = req.header(header::RANGE, r);
    }
    let resp = app.clone().oneshot(req.body(Body::empty()).unwrap()).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec();
    (status, headers, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    send(app, Method::GET, uri, None).await
}

fn json(body: &[u8]) -> Value {
    serde_json::from_slice(body).unwrap()
}

fn validator(def: &str) -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/api.schema.json");
    let mut schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    schema["$ref"] = Value::String(format!("#/$defs/{def}"));
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_schema(def: &str, doc: &Value) {
    let v = validator(def);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{def}: {errors:?}");
}

fn assert_error(status: StatusCode, body: &[u8], expected: StatusCode) {
    assert_eq!(status, expected);
    assert_schema("error", &json(body));
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.clone(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[tokio::test]
async fn session_index() {
    let f = fixture();
    let app = app(&f.data, None);
    let (status, headers, body) = get(&app, "/api/sessions").await;
    assert_eq!(status, StatusCode::OK);
    assert!(headers[header::CONTENT_TYPE].to_str().unwrap().starts_with("application/json"));
    let index = json(&body);
    assert_schema("sessionIndex", &index);
    let ids: Vec<&str> = index.as_array().unwrap().iter().map(|e| e["session_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["broken", "lecture", "raw", "still"]);
    let by_id = |id: &str| index.as_array().unwrap().iter().find(|e| e["session_id"] == id).unwrap().clone();
    assert_eq!(by_id("lecture")["analyzed"], true);
    assert_eq!(by_id("lecture")["duration"], 130.0);
    assert_eq!(by_id("lecture")["media_available"], true);
    assert!(by_id("lecture")["analyzed_at"].is_string());
    assert_eq!(by_id("broken")["analyzed"], false);
    assert_eq!(by_id("broken")["analyzed_at"], Value::Null);
    assert_eq!(by_id("raw")["analyzed"], false);
    assert_eq!(by_id("still")["media_available"], false);

    let empty = tempfile::tempdir().unwrap();
    let (status, _, body) = get(&app_empty(empty.path()), "/api/sessions").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body), serde_json::json!([]));
}

fn app_empty(dir: &Path) -> Router {
    app(dir, None)
}

#[tokio::test]
async fn summary_is_passed_through() {
    let f = fixture();
    let app = app(&f.data, None);
    let (status, headers, body) = get(&app, "/api/sessions/lecture/summary").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::CONTENT_TYPE], "application/json");
    assert_eq!(body, std::fs::read(f.data.join("lecture/summary.json")).unwrap());
    assert_schema("summary", &json(&body));

    let (status, _, body) = get(&app, "/api/sessions/nope/summary").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, _, body) = get(&app, "/api/sessions/broken/summary").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, _, body) = get(&app, "/api/nothing").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
}

/// Positive overlap, or containment for zero-length spans.
fn overlaps(start: f64, end: f64, from: f64, to: f64) -> bool {
    if start == end {
        from <= start && start <= to
    } else {
        start.max(from) < end.min(to)
    }
}

/// Filters the on-disk artifacts directly.
fn brute_force(dir: &Path, from: f64, to: f64) -> Value {
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let timeline: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("timeline.json")).unwrap()).unwrap();
    let num = |v: &Value| v.as_f64().unwrap();
    let windows: Vec<Value> = summary["windows"]["fine"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|w| overlaps(num(&w["interval"]["start"]), num(&w["interval"]["end"]), from, to))
        .cloned()
        .collect();
    let track: Vec<Value> = summary["xy_series"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| from <= num(&p["t"]) && num(&p["t"]) <= to)
        .cloned()
        .collect();
    let events: Vec<Value> = timeline["events"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| overlaps(num(&e["start"]), num(&e["end"]), from, to))
        .cloned()
        .collect();
    serde_json::json!({
        "session_id": summary["session_id"],
        "from": from,
        "to": to,
        "windows": windows,
        "track": track,
        "events": events,
    })
}

#[tokio::test]
async fn timeline_window() {
    let f = fixture();
    let app = app(&f.data, None);
    let (status, _, body) = get(&app, "/api/sessions/lecture/timeline?from=0&to=30").await;
    assert_eq!(status, StatusCode::OK);
    let slice = json(&body);
    assert_schema("timelineSlice", &slice);
    let spans: Vec<(f64, f64)> = slice["windows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| (w["interval"]["start"].as_f64().unwrap(), w["interval"]["end"].as_f64().unwrap()))
        .collect();
    assert_eq!(spans, [(0.0, 10.0), (10.0, 20.0), (20.0, 30.0)]);

    for (from, to) in [(0.0, 30.0), (5.0, 12.5), (19.999, 20.0), (40.0, 40.5), (0.0, 130.0), (125.0, 130.0), (3.3, 77.7)] {
        let (status, _, body) = get(&app, &format!("/api/sessions/lecture/timeline?from={from}&to={to}")).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(json(&body), brute_force(&f.data.join("lecture"), from, to), "[{from}, {to}]");
    }

    let (status, _, body) = get(&app, "/api/sessions/lecture/timeline?from=100&to=500").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["to"], 130.0);
    assert_eq!(json(&body), brute_force(&f.data.join("lecture"), 100.0, 130.0));

    let (status, _, body) = get(&app, "/api/sessions/lecture/timeline").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["windows"].as_array().unwrap().len(), 13);

    for bad in ["from=10&to=10", "from=20&to=10", "from=-1&to=10", "from=abc&to=10", "from=200", "to=NaN"] {
        let (status, _, body) = get(&app, &format!("/api/sessions/lecture/timeline?{bad}")).await;
        assert_error(status, &body, StatusCode::BAD_REQUEST);
    }
    let (status, _, body) = get(&app, "/api/sessions/nope/timeline?from=0&to=10").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn media_ranges() {
    let f = fixture();
    let app = app(&f.data, None);
    let bytes = std::fs::read(f.data.join("lecture/audio.wav")).unwrap();
    let size = bytes.len();
    let uri = "/api/sessions/lecture/media";

    let (status, headers, body) = send(&app, Method::GET, uri, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::ACCEPT_RANGES], "bytes");
    assert_eq!(headers[header::CONTENT_TYPE], "audio/wav");
    assert_eq!(body, bytes);

    let (status, headers, body) = send(&app, Method::GET, uri, Some("bytes=0-1023")).await;
    assert_eq!(status, StatusCode::PARTIAL_CONTENT);
    assert_eq!(body.len(), 1024);
    assert_eq!(body, bytes[..1024]);
    assert_eq!(headers[header::CONTENT_RANGE], format!("bytes 0-1023/{size}"));
    assert_eq!(headers[header::CONTENT_LENGTH], "1024");
    assert_eq!(headers[header::ACCEPT_RANGES], "bytes");

    let (status, headers, body) = send(&app, Method::GET, uri, Some("bytes=1000-")).await;
    assert_eq!(status, StatusCode::PARTIAL_CONTENT);
    assert_eq!(body, bytes[1000..]);
    assert_eq!(headers[header::CONTENT_RANGE], format!("bytes 1000-{}/{size}", size - 1));

    let (status, _, body) = send(&app, Method::GET, uri, Some("bytes=-100")).await;
    assert_eq!(status, StatusCode::PARTIAL_CONTENT);
    assert_eq!(body, bytes[size - 100..]);

    for r in [format!("bytes={size}-"), format!("bytes={}-{}", size + 10, size + 20), "bytes=0-1,4-9".to_string()] {
        let (status, headers, body) = send(&app, Method::GET, uri, Some(&r)).await;
        assert_error(status, &body, StatusCode::RANGE_NOT_SATISFIABLE);
        assert_eq!(headers[header::CONTENT_RANGE], format!("bytes */{size}"), "{r}");
    }

    let (status, _, body) = get(&app, "/api/sessions/still/media").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
    let (status, _, body) = get(&app, "/api/sessions/nope/media").await;
    assert_error(status, &body, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn reads_leave_disk_untouched_and_agree() {
    let f = fixture();
    let before = snapshot(&f.data);
    let app = app(&f.data, None);
    let uris = [
        "/api/sessions",
        "/api/sessions/lecture/summary",
        "/api/sessions/lecture/timeline?from=10&to=50",
        "/api/sessions/lecture/media",
    ];
    for uri in uris {
        let tasks: Vec<_> = (0..8)
            .map(|_| {
                let app = app.clone();
                tokio::spawn(async move { get(&app, uri).await })
            })
            .collect();
        let mut bodies = Vec::new();
        for t in tasks {
            let (status, _, body) = t.await.unwrap();
            assert_eq!(status, StatusCode::OK);
            bodies.push(body);
        }
        assert!(bodies.windows(2).all(|w| w[0] == w[1]), "{uri}");
    }
    send(&app, Method::GET, "/api/sessions/lecture/media", Some("bytes=5-10")).await;
    send(&app, Method::POST, "/api/reload", None).await;
    assert_eq!(snapshot(&f.data), before);
}

#[tokio::test]
async fn reload_rescans() {
    let f = fixture();
    let app = app(&f.data, None);
    analyzed(&f.data, "later", Scenario::Stationary);
    let (_, _, body) = get(&app, "/api/sessions").await;
    assert_eq!(json(&body).as_array().unwrap().len(), 4);
    let (status, _, _) = get(&app, "/api/sessions/later/summary").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, _, body) = send(&app, Method::POST, "/api/reload", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body).as_array().unwrap().len(), 5);
    let (status, _, _) = get(&app, "/api/sessions/later/summary").await;
    assert_eq!(status, StatusCode::OK);

    let (status, _, _) = get(&app, "/api/reload").await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
}

#[tokio::test]
async fn static_assets() {
    let f = fixture();
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<html>dash</html>").unwrap();
    let app = app(&f.data, Some(assets.path().to_path_buf()));
    let (status, _, body) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>dash</html>");
    let (status, _, _) = get(&app, "/api/sessions").await;
    assert_eq!(status, StatusCode::OK);
    let (status, _, _) = get(&app, "/missing.js").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn state_is_shared_snapshot() {
    let f = fixture();
    let state: Arc<AppState> = AppState::new(ServiceConfig { data_dir: f.data.clone(), static_dir: None }).unwrap();
    let a = state.catalog();
    let b = state.catalog();
    assert!(Arc::ptr_eq(&a, &b));
    assert!(AppState::new(ServiceConfig { data_dir: f.data.join("absent"), static_dir: None }).is_err());
}
