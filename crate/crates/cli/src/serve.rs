//! Read-only HTTP service over a G-Trans corpus.
//!
//! ```text
//! GET  /records        -> [{"id", "src", "text"}…]
//! GET  /records/{id}   -> G-Trans record
//! POST /derive         {"id", "assignment": {entity: "M"|"F"}} -> {"tokens", "text"}
//! POST /augment        {"src": [tok…], "yB": [tok…]} -> {"record": …} | {"passthrough": …}
//! ```
//!
//! Assignment keys are entity-list indices (`"0"`) or head words
//! (`"secretary"`, case-insensitive). Errors come back as `{"error": msg}`
//! with 404 for unknown records and 422 for invalid requests.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use genderalt::corpus::{EntityLabel, GTransRecord};
use genderalt::derive::{derive, DeriveError, GenderAssignment};
use genderalt::lexicon::InflectionLexicon;
use genderalt::pipeline::{Augmented, HeuristicAligner, LatticeTransformer, Pipeline, RuleDetector};
use genderalt::structure::{Gender, PlainTranslation};

/// Corpus and models shared by all requests; never mutated.
pub struct AppState {
    pub records: Vec<GTransRecord>,
    pub lexicon: InflectionLexicon,
    pub detector: RuleDetector,
    pub transformer: LatticeTransformer,
    pub aligner: HeuristicAligner,
}

impl AppState {
    pub fn new(records: Vec<GTransRecord>, lexicon: InflectionLexicon) -> Self {
        Self {
            records,
            transformer: LatticeTransformer::new(lexicon.clone()),
            lexicon,
            detector: RuleDetector::english(),
            aligner: HeuristicAligner::default(),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn not_found(message: impl Into<String>) -> Self {
        Self { status: StatusCode::NOT_FOUND, message: message.into() }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self { status: StatusCode::UNPROCESSABLE_ENTITY, message: message.into() }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        Self::invalid(rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RecordSummary {
    pub id: usize,
    pub src: Vec<String>,
    pub text: String,
}

#[derive(Debug, Deserialize)]
pub struct DeriveRequest {
    pub id: usize,
    #[serde(default)]
    pub assignment: BTreeMap<String, Gender>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DeriveResponse {
    pub tokens: Vec<String>,
    pub text: String,
}

#[derive(Debug, Deserialize)]
pub struct AugmentRequest {
    pub src: Vec<String>,
    #[serde(rename = "yB")]
    pub base: Vec<String>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/records", get(list_records))
        .route("/records/{id}", get(get_record))
        .route("/derive", post(derive_alternative))
        .route("/augment", post(augment))
        .with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn run(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("serving {} records on http://{}", state.records.len(), listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn record(state: &AppState, id: usize) -> Result<&GTransRecord, ApiError> {
    state.records.get(id).ok_or_else(|| ApiError::not_found(format!("no record with id {id}")))
}

async fn list_records(State(state): State<Arc<AppState>>) -> Json<Vec<RecordSummary>> {
    Json(
        state
            .records
            .iter()
            .enumerate()
            .map(|(id, r)| RecordSummary { id, src: r.source.tokens.clone(), text: r.source.tokens.join(" ") })
            .collect(),
    )
}

async fn get_record(State(state): State<Arc<AppState>>, Path(id): Path<usize>) -> Result<Json<GTransRecord>, ApiError> {
    record(&state, id).map(|r| Json(r.clone()))
}

fn entity_name(rec: &GTransRecord, entity: usize) -> String {
    match rec.source.head_word(entity) {
        Some(word) => format!("entity {entity} ({word})"),
        None => format!("entity {entity}"),
    }
}

/// Resolves assignment keys to entity-list indices of ambiguous entities.
pub fn resolve_assignment(
    rec: &GTransRecord,
    assignment: &BTreeMap<String, Gender>,
) -> Result<GenderAssignment, String> {
    let mut out = GenderAssignment::new();
    for (key, &gender) in assignment {
        let entity = match key.parse::<usize>() {
            Ok(idx) if idx < rec.source.entities.len() => idx,
            Ok(idx) => return Err(format!("no entity {idx}")),
            Err(_) => {
                let matches: Vec<usize> = (0..rec.source.entities.len())
                    .filter(|&e| rec.source.head_word(e).is_some_and(|w| w.eq_ignore_ascii_case(key)))
                    .collect();
                match matches.as_slice() {
                    [e] => *e,
                    [] => return Err(format!("no entity with head word {key:?}")),
                    _ => return Err(format!("head word {key:?} names several entities; use an index")),
                }
            }
        };
        if rec.source.entities[entity].label != EntityLabel::Ambiguous {
            return Err(format!("{} is not gender-ambiguous", entity_name(rec, entity)));
        }
        if out.get(entity).is_some_and(|g| g != gender) {
            return Err(format!("{} is assigned twice", entity_name(rec, entity)));
        }
        out = out.with(entity, gender);
    }
    Ok(out)
}

async fn derive_alternative(
    State(state): State<Arc<AppState>>,
    body: Result<Json<DeriveRequest>, JsonRejection>,
) -> Result<Json<DeriveResponse>, ApiError> {
    let Json(req) = body?;
    let rec = record(&state, req.id)?;
    let assignment = resolve_assignment(rec, &req.assignment).map_err(ApiError::invalid)?;
    let out = derive(&rec.target, &rec.alignments, &assignment).map_err(|e| match e {
        DeriveError::MissingAssignment { entity } => {
            ApiError::invalid(format!("missing gender assignment for {}", entity_name(rec, entity)))
        }
        other => ApiError::invalid(other.to_string()),
    })?;
    Ok(Json(DeriveResponse { text: out.detokenized(), tokens: out.tokens }))
}

async fn augment(
    State(state): State<Arc<AppState>>,
    body: Result<Json<AugmentRequest>, JsonRejection>,
) -> Result<Json<Augmented>, ApiError> {
    let Json(req) = body?;
    let base = PlainTranslation::new(req.base).map_err(|e| ApiError::invalid(e.to_string()))?;
    let state = Arc::clone(&state);
    // decoding is CPU-bound; keep it off the async workers
    tokio::task::spawn_blocking(move || {
        let pipeline = Pipeline {
            detector: &state.detector,
            transformer: &state.transformer,
            aligner: &state.aligner,
            lexicon: &state.lexicon,
        };
        pipeline.augment(&req.src, &base).map(Json).map_err(|e| ApiError::invalid(e.to_string()))
    })
    .await
    .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: e.to_string() })?
}
