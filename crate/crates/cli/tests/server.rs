use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use ifgen::fixtures;
use ifgen::sql::parse;
use ifgen::widgets::InterfaceSpec;
use ifgen_cli::data::Database;
use ifgen_cli::serve::{router, AppState};

fn app(data: Option<Database>) -> Router {
    let spec = fixtures::fig2b_spec(&fixtures::fig1_queries()[0]);
    router(Arc::new(AppState::new(spec, data)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn session(app: &Router) -> String {
    let (st, v) = call(app, "POST", "/session", None).await;
    assert_eq!(st, StatusCode::OK);
    v["session"].as_str().unwrap().to_string()
}

async fn interact(app: &Router, s: &str, path: Value, u: &str) -> (StatusCode, Value) {
    call(app, "POST", "/interact", Some(json!({"session": s, "widget_path": path, "u": u}))).await
}

#[tokio::test]
async fn spec_roundtrips() {
    let app = app(None);
    let (st, v) = call(&app, "GET", "/spec", None).await;
    assert_eq!(st, StatusCode::OK);
    let spec: InterfaceSpec = serde_json::from_value(v).unwrap();
    assert_eq!(spec, fixtures::fig2b_spec(&fixtures::fig1_queries()[0]));
}

#[tokio::test]
async fn toggle_off_drops_the_where() {
    let app = app(None);
    let s = session(&app).await;
    let (st, v) = interact(&app, &s, json!([2]), "off").await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["current_query_sql"], "select sales from product");
    let country = v["widgets"]
        .as_array()
        .unwrap()
        .iter()
        .find(|w| w["binding_path"] == json!([2, 0, 0, 2]))
        .unwrap();
    assert_eq!(country["enabled"], false);
}

#[tokio::test]
async fn dropdown_selects_costs() {
    let app = app(None);
    let s = session(&app).await;
    let (st, v) = interact(&app, &s, json!([0, 0]), "Costs").await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let sql = v["current_query_sql"].as_str().unwrap();
    assert!(sql.contains("costs"), "{sql}");
    let (_, v) = interact(&app, &s, json!([2]), "off").await;
    assert_eq!(v["current_query_sql"], "select costs from product");
}

#[tokio::test]
async fn out_of_domain_echoes_the_domain() {
    let app = app(None);
    let s = session(&app).await;
    let (st, v) = interact(&app, &s, json!([0, 0]), "Profit").await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "out_of_domain");
    assert_eq!(v["domain"], json!(["sales", "costs"]));
    // the session is unchanged
    let (_, spec) = call(&app, "GET", &format!("/spec?session={s}"), None).await;
    assert_eq!(spec["current_query_sql"], "select sales from product where country = 'USA'");
}

#[tokio::test]
async fn bad_paths_and_sessions() {
    let app = app(None);
    let s = session(&app).await;
    let (st, v) = interact(&app, &s, json!([7]), "on").await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("path_invalid")));
    let (st, v) = interact(&app, "nope", json!([2]), "off").await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_session")));
    let (st, _) = call(&app, "GET", "/result?session=nope", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(&app, "GET", "/spec?session=nope", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = app(None);
    let a = session(&app).await;
    let b = session(&app).await;
    assert_ne!(a, b);
    interact(&app, &a, json!([2]), "off").await;
    let (_, ra) = call(&app, "GET", &format!("/result?session={a}"), None).await;
    let (_, rb) = call(&app, "GET", &format!("/result?session={b}"), None).await;
    assert_eq!(ra["sql"], "select sales from product");
    assert_eq!(rb["sql"], "select sales from product where country = 'USA'");
    assert_eq!(ra["rows"], Value::Null);
}

#[tokio::test]
async fn result_runs_against_data() {
    let db = Database::from_json(
        r#"{"product": [
            {"sales": 1, "costs": 5, "country": "USA"},
            {"sales": 2, "costs": 6, "country": "EUR"}
        ]}"#,
    )
    .unwrap();
    let app = app(Some(db));
    let s = session(&app).await;
    let (st, v) = call(&app, "GET", &format!("/result?session={s}"), None).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["columns"], json!(["sales"]));
    assert_eq!(v["rows"], json!([[1]]));
    interact(&app, &s, json!([2, 0, 0, 2]), "EUR").await;
    interact(&app, &s, json!([0, 0]), "costs").await;
    let (_, v) = call(&app, "GET", &format!("/result?session={s}"), None).await;
    assert_eq!(v["rows"], json!([[6]]));
}

#[tokio::test]
async fn any_interaction_sequence_keeps_the_query_expressible() {
    use rand::{Rng, SeedableRng};
    let app = app(None);
    let s = session(&app).await;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let tree = fixtures::fig5_tree();
    for _ in 0..60 {
        let (_, v) = call(&app, "GET", &format!("/spec?session={s}"), None).await;
        let spec: InterfaceSpec = serde_json::from_value(v).unwrap();
        let states = ifgen::widgets::widget_states(&spec);
        let live: Vec<_> = states.iter().filter(|w| w.enabled).collect();
        let w = live[rng.random_range(0..live.len())];
        let dom = &spec.widget_tree.as_ref().unwrap().find_binding(&w.binding_path).unwrap().domain;
        let u = dom[rng.random_range(0..dom.len())].clone();
        let (st, v) = interact(&app, &s, json!(w.instance_path), &u).await;
        assert_eq!(st, StatusCode::OK, "{v}");
        let q = parse(v["current_query_sql"].as_str().unwrap()).unwrap();
        assert!(ifgen::difftree::expressible(&tree, &q).is_some());
    }
}
