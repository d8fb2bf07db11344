use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use genderalt::corpus::toy_corpus;
use genderalt::derive::{derive, GenderAssignment};
use genderalt::lexicon::spanish_lexicon;
use genderalt::structure::Gender;
use genderalt_cli::serve::{router, AppState};

fn toy_state() -> Arc<AppState> {
    Arc::new(AppState::new(toy_corpus(), spanish_lexicon()))
}

async fn call(state: Arc<AppState>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = router(state).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::test]
async fn empty_corpus_lists_nothing() {
    let state = Arc::new(AppState::new(vec![], spanish_lexicon()));
    let (status, body) = call(state, "GET", "/records", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));
}

#[tokio::test]
async fn records_are_listed_and_fetched() {
    let (status, body) = call(toy_state(), "GET", "/records", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body.as_array().unwrap().len(), 50);
    assert_eq!(body[0]["text"], "The secretary was angry with the boss .");

    let (status, body) = call(toy_state(), "GET", "/records/2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["align"], json!([1, 1, 2]));
}

#[tokio::test]
async fn derive_matches_library() {
    let state = toy_state();
    let (status, body) = call(
        Arc::clone(&state),
        "POST",
        "/derive",
        Some(json!({"id": 0, "assignment": {"secretary": "M", "boss": "F"}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let rec = &state.records[0];
    let expected = derive(
        &rec.target,
        &rec.alignments,
        &GenderAssignment::new().with(0, Gender::Masculine).with(1, Gender::Feminine),
    )
    .unwrap();
    assert_eq!(body["tokens"], json!(expected.tokens));
    assert_eq!(body["text"], "El secretario estaba enojado con la jefa.");

    // index keys work too
    let (status, body) =
        call(state, "POST", "/derive", Some(json!({"id": 0, "assignment": {"0": "F", "1": "F"}}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["text"], "La secretaria estaba enojada con la jefa.");
}

#[tokio::test]
async fn partial_assignment_names_missing_entity() {
    let (status, body) =
        call(toy_state(), "POST", "/derive", Some(json!({"id": 0, "assignment": {"secretary": "M"}}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("boss"), "{body}");
}

#[tokio::test]
async fn bad_derive_requests() {
    let (status, body) = call(toy_state(), "POST", "/derive", Some(json!({"id": 999, "assignment": {}}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].is_string());

    let (status, _) = call(toy_state(), "GET", "/records/999", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    // the lawyer is masculine in the source
    let (status, body) = call(
        toy_state(),
        "POST",
        "/derive",
        Some(json!({"id": 2, "assignment": {"lawyer": "F", "child": "M", "judge": "M"}})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("not gender-ambiguous"));

    let (status, _) = call(toy_state(), "POST", "/derive", Some(json!({"id": 0, "assignment": {"boss": "X"}}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(toy_state(), "POST", "/derive", Some(json!({"assignment": {}}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn augment_endpoint() {
    let state = toy_state();
    let (status, body) = call(
        Arc::clone(&state),
        "POST",
        "/augment",
        Some(json!({
            "src": ["The", "doctor", "was", "angry", "with", "the", "patient"],
            "yB": ["El", "doctor", "estaba", "enojado", "con", "el", "paciente"]
        })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["record"], serde_json::to_value(&state.records[1]).unwrap());

    let (status, body) = call(
        state,
        "POST",
        "/augment",
        Some(json!({"src": ["She", "is", "a", "boss"], "yB": ["Ella", "es", "una", "jefa"]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"passthrough": {"src": ["She", "is", "a", "boss"], "yB": ["Ella", "es", "una", "jefa"]}}));
}
