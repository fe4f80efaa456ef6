use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use base64::Engine;
use http_body_util::BodyExt;
use magdisplay::constraints::{limits, CellSpec, PrinterProfile, Shape};
use magdisplay::mesh::{primitives, read_mesh, stl_bytes, MeshFormat};
use magdisplay::pipeline::{cmd_pipeline, ARTIFACT_NAMES};
use magdisplay_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn plate_stl() -> Vec<u8> {
    stl_bytes(&primitives::sheet(30.0, 30.0, 6, 6))
}

fn spec() -> CellSpec {
    CellSpec::new(Shape::Square, 4.0, 1.0, 3.0, 0.6)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn create(app: &Router, spec: &CellSpec) -> u64 {
    let body = json!({
        "name": "plate",
        "mesh_format": "stl",
        "mesh_base64": base64::engine::general_purpose::STANDARD.encode(plate_stl()),
        "spec": spec,
    });
    let (status, v) = call_json(app, "POST", "/jobs", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_eq!(v["state"], "created");
    v["id"].as_u64().unwrap()
}

async fn wait_for(app: &Router, id: u64, state: &str) -> Value {
    for _ in 0..600 {
        let (_, v) = call_json(app, "GET", &format!("/jobs/{id}"), None).await;
        if v["state"] == state && v["activity"] == "idle" {
            return v;
        }
        assert_ne!(v["state"], "failed", "{v}");
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job {id} never reached {state}");
}

#[tokio::test(flavor = "multi_thread")]
async fn limits_match_the_validator() {
    let app = router(AppState::new());
    let (status, v) = call_json(&app, "GET", "/limits", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, serde_json::to_value(limits(&PrinterProfile::default())).unwrap());
    assert_eq!(v["inscribed_diameter"]["min"], 2.5);
    assert_eq!(v["inscribed_diameter"]["max"], 6.5);
}

#[tokio::test(flavor = "multi_thread")]
async fn validate_reports_violations() {
    let app = router(AppState::new());
    let bad = CellSpec::new(Shape::Circle, 2.0, 1.0, 5.0, 0.6);
    let (status, v) = call_json(&app, "POST", "/validate", Some(json!({ "spec": bad }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["valid"], false);
    assert_eq!(v["violations"][0]["code"], "TooSmall");
}

#[tokio::test(flavor = "multi_thread")]
async fn generate_then_poll_serves_preview() {
    let app = router(AppState::new());
    let id = create(&app, &spec()).await;
    let (status, v) = call_json(&app, "GET", &format!("/jobs/{id}/preview"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "not_found");
    let (status, _) = call_json(&app, "POST", &format!("/jobs/{id}/generate"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = wait_for(&app, id, "generated").await;
    let (status, preview) = call_json(&app, "GET", &format!("/jobs/{id}/preview"), None).await;
    assert_eq!(status, StatusCode::OK);
    let cells = preview["cells"].as_array().unwrap().len();
    assert_eq!(cells as u64, job["cells"]["centers"].as_u64().unwrap());
    assert_eq!(preview["report"], job["cells"]);
    let (status, v) = call_json(&app, "GET", &format!("/jobs/{id}/violations"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["valid"], true);
}

#[tokio::test(flavor = "multi_thread")]
async fn steps_are_serialized_fifo() {
    let app = router(AppState::new());
    let a = create(&app, &spec()).await;
    let b = create(&app, &spec()).await;
    let (_, first) = call_json(&app, "POST", &format!("/jobs/{a}/generate"), None).await;
    let (_, second) = call_json(&app, "POST", &format!("/jobs/{b}/generate"), None).await;
    assert_eq!(first["position"], 0);
    assert!(second["position"].as_u64().unwrap() >= 1 || second["activity"] == "queued");
    wait_for(&app, a, "generated").await;
    wait_for(&app, b, "generated").await;
    let (_, q) = call_json(&app, "GET", "/queue", None).await;
    let log: Vec<(u64, String)> = q["log"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["job"].as_u64().unwrap(), e["phase"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(
        log,
        vec![(a, "start".into()), (a, "end".into()), (b, "start".into()), (b, "end".into())]
    );
}

#[tokio::test(flavor = "multi_thread")]
async fn errors_are_structured() {
    let app = router(AppState::new());
    let (status, v) = call_json(&app, "GET", "/jobs/99", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "not_found");
    let id = create(&app, &spec()).await;
    let (status, v) = call_json(&app, "POST", &format!("/jobs/{id}/plan"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "job_state");
    assert_eq!(v["error"]["exit_code"], 9);
    // A step may be queued behind the one that makes it legal.
    let (status, _) = call_json(&app, "POST", &format!("/jobs/{id}/generate"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let (status, _) = call_json(&app, "POST", &format!("/jobs/{id}/plan"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    wait_for(&app, id, "planned").await;

    let bad = create(&app, &CellSpec::new(Shape::Square, 8.0, 1.0, 3.0, 0.6)).await;
    call_json(&app, "POST", &format!("/jobs/{bad}/generate"), None).await;
    let mut v = Value::Null;
    for _ in 0..200 {
        v = call_json(&app, "GET", &format!("/jobs/{bad}"), None).await.1;
        if v["state"] == "failed" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }
    assert_eq!(v["state"], "failed");
    assert_eq!(v["error"]["code"], "spec_invalid");
    assert_eq!(v["artifacts"], json!([]));

    let (status, v) = call_json(
        &app,
        "POST",
        "/jobs",
        Some(json!({"mesh_format": "stl", "mesh_base64": "!!", "spec": spec()})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "parse_error");
}

#[tokio::test(flavor = "multi_thread")]
async fn service_artifacts_match_the_library_pipeline() {
    let app = router(AppState::new());
    let id = create(&app, &spec()).await;
    for step in ["generate", "plan", "postprocess"] {
        let (status, v) = call_json(&app, "POST", &format!("/jobs/{id}/{step}"), None).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{step}: {v}");
    }
    wait_for(&app, id, "postprocessed").await;
    let mesh = read_mesh(&plate_stl(), MeshFormat::Stl).unwrap();
    let direct = cmd_pipeline(&mesh, None, &spec(), &PrinterProfile::default()).unwrap();
    for name in ARTIFACT_NAMES {
        let (status, bytes) = call(&app, "GET", &format!("/jobs/{id}/artifacts/{name}"), None).await;
        assert_eq!(status, StatusCode::OK, "{name}");
        assert!(bytes == direct.artifact(name).unwrap(), "{name} differs");
    }
}
