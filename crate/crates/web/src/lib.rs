//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond `JSON.parse`. The `*_json` functions hold the logic and are plain
//! Rust, which keeps them testable off the browser.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use genderalt::corpus::{toy_corpus, EntityLabel, GTransRecord};
use genderalt::derive::{derive, GenderAssignment};
use genderalt::group::group;
use genderalt::lexicon::spanish_lexicon;
use genderalt::pipeline::{Augmented, HeuristicAligner, LatticeTransformer, Pipeline, RuleDetector};
use genderalt::structure::{serialize, Gender, PlainTranslation, Segment};

/// An entity as shown on the page.
#[derive(Debug, Serialize)]
pub struct EntityView {
    pub head: String,
    /// `"M"`, `"F"` or `"A"`.
    pub label: EntityLabel,
}

/// A structure or plain token of the target, for highlighting.
#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpanView {
    Token { text: String },
    Structure { masculine: String, feminine: String, entity: usize },
}

#[derive(Debug, Serialize)]
pub struct RecordView {
    pub id: usize,
    pub source: String,
    pub entities: Vec<EntityView>,
    pub target: Vec<SpanView>,
    pub serialized: String,
}

fn view(id: usize, rec: &GTransRecord) -> RecordView {
    let mut k = 0;
    let target = rec
        .target
        .segments()
        .iter()
        .map(|seg| match seg {
            Segment::Token(t) => SpanView::Token { text: t.clone() },
            Segment::Structure(s) => {
                let entity = rec.alignments.by_structure[k];
                k += 1;
                SpanView::Structure { masculine: s.masculine().join(" "), feminine: s.feminine().join(" "), entity }
            }
        })
        .collect();
    RecordView {
        id,
        source: rec.source.tokens.join(" "),
        entities: rec
            .source
            .entities
            .iter()
            .map(|e| EntityView { head: rec.source.tokens[e.head_index].clone(), label: e.label })
            .collect(),
        target,
        serialized: serialize(&rec.target).tokens.join(" "),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// The bundled toy corpus as a list of [`RecordView`]s.
pub fn records_json() -> Result<String, String> {
    let views: Vec<RecordView> = toy_corpus().iter().enumerate().map(|(i, r)| view(i, r)).collect();
    to_json(&views)
}

#[derive(Debug, Serialize)]
struct Derived {
    text: String,
    tokens: Vec<String>,
}

/// Realizes record `id` of the toy corpus.
///
/// `genders` is a JSON array with one entry per source entity: `"M"`,
/// `"F"`, or `null` for entities whose gender is fixed by the source.
pub fn derive_json(id: usize, genders: &str) -> Result<String, String> {
    let corpus = toy_corpus();
    let rec = corpus.get(id).ok_or_else(|| format!("no record with id {id}"))?;
    let genders: Vec<Option<Gender>> = serde_json::from_str(genders).map_err(|e| e.to_string())?;
    let mut assignment = GenderAssignment::new();
    for (entity, g) in genders.into_iter().enumerate() {
        if let Some(g) = g {
            assignment = assignment.with(entity, g);
        }
    }
    let y = derive(&rec.target, &rec.alignments, &assignment).map_err(|e| e.to_string())?;
    to_json(&Derived { text: y.detokenized(), tokens: y.tokens })
}

/// Groups an all-masculine and an all-feminine translation (whitespace
/// tokenized) with the bundled Spanish lexicon; returns the marker string.
pub fn group_json(masculine: &str, feminine: &str) -> Result<String, String> {
    let m = PlainTranslation::from_text(masculine).map_err(|e| e.to_string())?;
    let f = PlainTranslation::from_text(feminine).map_err(|e| e.to_string())?;
    let ys = group(&m, &f, &spanish_lexicon()).map_err(|e| e.to_string())?;
    to_json(&serialize(&ys).tokens.join(" "))
}

#[derive(Debug, Deserialize)]
struct AugmentInput {
    source: String,
    translation: String,
}

#[derive(Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
enum AugmentView {
    Record { record: RecordView },
    Passthrough,
}

/// Runs the model-free pipeline (rule detector, lattice transformer,
/// heuristic aligner) on `{"source", "translation"}`.
pub fn augment_json(input: &str) -> Result<String, String> {
    let input: AugmentInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let source: Vec<String> = input.source.split_whitespace().map(str::to_owned).collect();
    let base = PlainTranslation::from_text(&input.translation).map_err(|e| e.to_string())?;
    let lexicon = spanish_lexicon();
    let detector = RuleDetector::english();
    let transformer = LatticeTransformer::new(lexicon.clone());
    let aligner = HeuristicAligner::default();
    let pipeline = Pipeline { detector: &detector, transformer: &transformer, aligner: &aligner, lexicon: &lexicon };
    let out = match pipeline.augment(&source, &base).map_err(|e| e.to_string())? {
        Augmented::Record(rec) => AugmentView::Record { record: view(0, &rec) },
        Augmented::Passthrough { .. } => AugmentView::Passthrough,
    };
    to_json(&out)
}

// ---------------------------------------------------------------------------
// Exports

fn js(result: Result<String, String>) -> Result<String, JsError> {
    result.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn records() -> Result<String, JsError> {
    js(records_json())
}

#[wasm_bindgen(js_name = deriveAlternative)]
pub fn derive_alternative(id: usize, genders: &str) -> Result<String, JsError> {
    js(derive_json(id, genders))
}

#[wasm_bindgen(js_name = groupPair)]
pub fn group_pair(masculine: &str, feminine: &str) -> Result<String, JsError> {
    js(group_json(masculine, feminine))
}

#[wasm_bindgen]
pub fn augment(input: &str) -> Result<String, JsError> {
    js(augment_json(input))
}
