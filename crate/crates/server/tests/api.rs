use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use qiq_core::BeliefNetwork;
use qiq_server::{router, AppState, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(BeliefNetwork::sneeze(), ServerConfig::default()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn session(app: &Router) -> String {
    let (status, body) = call(app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    body["id"].as_str().unwrap().to_string()
}

async fn observe(app: &Router, id: &str, var: &str, value: Value) -> (StatusCode, Value) {
    call(app, Method::PUT, &format!("/sessions/{id}/evidence"), Some(json!({"var": var, "value": value}))).await
}

#[tokio::test]
async fn fresh_posterior() {
    let app = app();
    let id = session(&app).await;
    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}/posterior?target=cold"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!((body["probability"].as_f64().unwrap() - 0.08).abs() < 1e-12);
    assert_eq!(body["text"], "Cold is very unlikely (p=0.08).");
}

#[tokio::test]
async fn why_renders_the_sneezing_explanation() {
    let app = app();
    let id = session(&app).await;
    assert_eq!(observe(&app, &id, "sneezing", json!(true)).await.0, StatusCode::OK);
    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}/why?target=cold"), None).await;
    assert_eq!(status, StatusCode::OK);
    let text = body["text"].as_str().unwrap();
    assert!(text.starts_with("Given:\n\nSneezing must have been caused by cold or allergy.\n"));
    assert!(text.contains("A. Cold and no cat hence no allergy\t0.47\n"));
    assert!(text.contains("B. No Cold and cat causing allergy\t0.48\n"));
    assert!(text.ends_with("Therefore cold is slightly more likely than not (p=0.52).\n"));
    assert_eq!(body["document"]["compatible"]["entries"][0]["tag"], "A");

    let (_, body) = call(
        &app,
        Method::GET,
        &format!("/sessions/{id}/why?target=cold&listThreshold=0.05&numbers=false"),
        None,
    )
    .await;
    assert_eq!(body["document"]["compatible"]["entries"].as_array().unwrap().len(), 2);
    assert!(body["text"].as_str().unwrap().ends_with("slightly more likely than not.\n"));
    // overrides are per request
    let (_, body) = call(&app, Method::GET, &format!("/sessions/{id}/why?target=cold"), None).await;
    assert_eq!(body["document"]["compatible"]["entries"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn impossible_evidence_conflicts_and_leaves_state() {
    let app = app();
    let id = session(&app).await;
    assert_eq!(observe(&app, &id, "barking", json!(true)).await.0, StatusCode::OK);
    let (status, body) = observe(&app, &id, "dog", json!(false)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["conflict"], json!([{"var": "dog", "value": false}, {"var": "barking", "value": true}]));
    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}/evidence"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["evidence"], json!([{"var": "barking", "value": true}]));
}

#[tokio::test]
async fn evidence_put_is_idempotent() {
    let app = app();
    let id = session(&app).await;
    let first = observe(&app, &id, "paw marks", json!(true)).await;
    let second = observe(&app, &id, "paw_marks", json!(true)).await;
    assert_eq!(first, second);
    assert_eq!(first.1["evidence"], json!([{"var": "paw_marks", "value": true}]));
    let cleared = observe(&app, &id, "paw_marks", Value::Null).await;
    assert_eq!(cleared.1["evidence"], json!([]));
    assert_eq!(observe(&app, &id, "paw_marks", Value::Null).await, cleared);
}

#[tokio::test]
async fn network_exposes_strengths_and_leaks() {
    let app = app();
    let (status, body) = call(&app, Method::GET, "/network", None).await;
    assert_eq!(status, StatusCode::OK);
    let arcs = body["arcs"].as_array().unwrap();
    let arc = |p: &str, c: &str| arcs.iter().find(|a| a["parent"] == p && a["child"] == c).unwrap().clone();
    assert_eq!(arc("cold", "sneezing")["strength"], 0.9);
    assert_eq!(arc("dog", "barking")["strength"], 0.5);
    assert_eq!(arc("cat", "allergy")["sign"], "plus");
    let paw = body["variables"].as_array().unwrap().iter().find(|v| v["name"] == "paw_marks").unwrap();
    assert_eq!(paw["model"]["leak"], 0.1);
    assert_eq!(body["polytree"], true);
}

#[tokio::test]
async fn impact_trace() {
    let app = app();
    let id = session(&app).await;
    observe(&app, &id, "sneezing", json!(true)).await;
    observe(&app, &id, "paw_marks", json!(true)).await;
    let (status, body) =
        call(&app, Method::GET, &format!("/sessions/{id}/impact?finding=barking&target=cold"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["result"]["overall_sign"], "plus");
    assert!(body["text"].as_str().unwrap().contains("4. Reduced probability of allergy"));
}

#[tokio::test]
async fn describe_and_scales() {
    let app = app();
    let (status, body) = call(&app, Method::GET, "/describe?comparePriors=true", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["sentences"][0], "Cold is very unlikely (p=0.08).");
    assert!(body["text"].as_str().unwrap().contains("Cold is slightly less likely than cat (0.08/0.10).\n"));
    let (status, body) = call(&app, Method::GET, "/scales", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["defaults"]["absolute"], "qiq-default");
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let ghost = "00000000-0000-4000-8000-000000000000";
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{ghost}/posterior?target=cold"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::GET, "/sessions/not-a-uuid/evidence", None).await.0, StatusCode::NOT_FOUND);
    let id = session(&app).await;
    let bad = |uri: String| {
        let app = app.clone();
        async move { call(&app, Method::GET, &uri, None).await.0 }
    };
    assert_eq!(bad(format!("/sessions/{id}/posterior")).await, StatusCode::BAD_REQUEST);
    assert_eq!(bad(format!("/sessions/{id}/posterior?target=unicorn")).await, StatusCode::BAD_REQUEST);
    assert_eq!(bad(format!("/sessions/{id}/why?target=cold&listThreshold=2")).await, StatusCode::BAD_REQUEST);
    assert_eq!(bad(format!("/sessions/{id}/why?target=cold&scale=nope")).await, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, Method::PUT, &format!("/sessions/{id}/evidence"), Some(json!({"value": true}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let req = Request::builder()
        .method(Method::PUT)
        .uri(format!("/sessions/{id}/evidence"))
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);

    observe(&app, &id, "sneezing", json!(true)).await;
    assert_eq!(bad(format!("/sessions/{id}/why?target=sneezing")).await, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn non_polytree_impact_is_unprocessable() {
    let net = qiq_core::NetworkBuilder::new()
        .root("a", 0.5)
        .table("b", &["a"], vec![0.2, 0.7])
        .table("c", &["a"], vec![0.3, 0.6])
        .table("d", &["b", "c"], vec![0.1, 0.4, 0.5, 0.9])
        .build()
        .unwrap();
    let app = router(AppState::new(net, ServerConfig::default()));
    let id = session(&app).await;
    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}/impact?finding=d&target=a"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = app();
    let (a, b) = (session(&app).await, session(&app).await);
    observe(&app, &a, "sneezing", json!(true)).await;
    let p = |id: String| {
        let app = app.clone();
        async move { call(&app, Method::GET, &format!("/sessions/{id}/posterior?target=cold"), None).await.1["probability"].as_f64().unwrap() }
    };
    assert!(p(a).await > 0.5);
    assert!((p(b).await - 0.08).abs() < 1e-12);
}

#[tokio::test]
async fn shared_state_survives_concurrent_requests() {
    let state = AppState::new(BeliefNetwork::sneeze(), ServerConfig::default());
    let app = router(Arc::clone(&state));
    let id = session(&app).await;
    let tasks: Vec<_> = (0..16)
        .map(|i| {
            let (app, id) = (app.clone(), id.clone());
            tokio::spawn(async move {
                let value = if i % 2 == 0 { json!(true) } else { Value::Null };
                observe(&app, &id, "sneezing", value).await.0
            })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    assert_eq!(state.session_count().await, 1);
    let (status, info) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(info["id"], id.as_str());
    assert!(info["age_seconds"].as_f64().unwrap() >= 0.0);
}
