//! Record types and JSONL I/O for G-Tag, G-Trans and evaluation corpora.
//!
//! Wire format, one JSON object per line:
//!
//! ```text
//! G-Tag:   {"src": [tok…], "entities": [{"i": int, "g": "M"|"F"|"A"}…]}
//! G-Trans: {"src": [tok…], "entities": […], "tgt": [seg…], "align": [int…]}
//! ```
//!
//! A target segment is either a plain token string or `{"m": [tok…], "f": [tok…]}`.
//! Unknown fields are ignored. Records are validated on read; nothing is
//! repaired silently.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive::{AlignmentMap, GenderAssignment};
use crate::structure::{is_marker, Gender, StructuredTranslation};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: malformed JSON: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("{reason}")]
    Mismatch { reason: String },
}

/// Gender label of an annotated source entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntityLabel {
    #[serde(rename = "M")]
    Masculine,
    #[serde(rename = "F")]
    Feminine,
    #[serde(rename = "A")]
    Ambiguous,
}

impl EntityLabel {
    /// The fixed gender of a non-ambiguous entity.
    pub fn gender(self) -> Option<Gender> {
        match self {
            EntityLabel::Masculine => Some(Gender::Masculine),
            EntityLabel::Feminine => Some(Gender::Feminine),
            EntityLabel::Ambiguous => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityAnnotation {
    #[serde(rename = "i")]
    pub head_index: usize,
    #[serde(rename = "g")]
    pub label: EntityLabel,
}

/// Tokenized source sentence with entity head-word annotations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotatedSource {
    #[serde(rename = "src")]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub entities: Vec<EntityAnnotation>,
}

impl AnnotatedSource {
    pub fn new(tokens: Vec<String>, entities: Vec<EntityAnnotation>) -> Result<Self, String> {
        let src = Self { tokens, entities };
        src.validate()?;
        Ok(src)
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(tok) = self.tokens.iter().find(|t| is_marker(t)) {
            return Err(format!("source token {tok:?} is a reserved marker"));
        }
        let n = self.tokens.len();
        let mut seen = std::collections::HashSet::new();
        for (idx, e) in self.entities.iter().enumerate() {
            if e.head_index >= n {
                return Err(format!("entity {idx}: head index {} out of range for {n} source tokens", e.head_index));
            }
            if !seen.insert(e.head_index) {
                return Err(format!("entity {idx}: duplicate head index {}", e.head_index));
            }
        }
        Ok(())
    }

    /// Entity-list indices of the ambiguous entities.
    pub fn ambiguous(&self) -> Vec<usize> {
        self.entities.iter().enumerate().filter(|(_, e)| e.label == EntityLabel::Ambiguous).map(|(i, _)| i).collect()
    }

    /// Ambiguous entity-list indices ordered by head position.
    pub fn ambiguous_by_head(&self) -> Vec<usize> {
        let mut amb = self.ambiguous();
        amb.sort_by_key(|&i| self.entities[i].head_index);
        amb
    }

    pub fn head_word(&self, entity: usize) -> Option<&str> {
        self.entities.get(entity).map(|e| self.tokens[e.head_index].as_str())
    }
}

/// G-Trans record: source, structured target and gender alignments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GTransRecord {
    #[serde(flatten)]
    pub source: AnnotatedSource,
    #[serde(rename = "tgt")]
    pub target: StructuredTranslation,
    #[serde(rename = "align", default)]
    pub alignments: AlignmentMap,
}

impl GTransRecord {
    pub fn new(
        source: AnnotatedSource,
        target: StructuredTranslation,
        alignments: AlignmentMap,
    ) -> Result<Self, String> {
        let rec = Self { source, target, alignments };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.source.validate()?;
        let k = self.target.structure_count();
        if self.alignments.len() != k {
            return Err(format!("{} alignments for {k} gender structures", self.alignments.len()));
        }
        for (s, &e) in self.alignments.by_structure.iter().enumerate() {
            match self.source.entities.get(e) {
                None => return Err(format!("structure {s} aligned to missing entity {e}")),
                Some(ann) if ann.label != EntityLabel::Ambiguous => {
                    return Err(format!("structure {s} aligned to non-ambiguous entity {e}"))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Aligned entities ordered by head position.
    pub fn aligned_entities(&self) -> Vec<usize> {
        let mut ents = self.alignments.entities();
        ents.sort_by_key(|&e| self.source.entities[e].head_index);
        ents
    }

    /// All alternatives, varying aligned entities in head-position order.
    pub fn alternatives(
        &self,
    ) -> Result<Vec<(GenderAssignment, crate::structure::PlainTranslation)>, crate::derive::DeriveError> {
        crate::derive::enumerate_in_order(&self.target, &self.alignments, &self.aligned_entities())
    }
}

/// G-Tag record: source with head-word gender labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GTagRecord {
    pub source: AnnotatedSource,
}

/// A record type that can be validated after deserialization.
pub trait Record: Serialize + DeserializeOwned {
    fn validate(&self) -> Result<(), String>;
}

impl Record for GTransRecord {
    fn validate(&self) -> Result<(), String> {
        GTransRecord::validate(self)
    }
}

impl Record for GTagRecord {
    fn validate(&self) -> Result<(), String> {
        self.source.validate()?;
        if self.source.entities.is_empty() {
            return Err("G-Tag record has no entity annotations".into());
        }
        Ok(())
    }
}

/// Parses and validates one JSONL line; `line` is 1-based and used for errors.
pub fn parse_line<R: Record>(text: &str, line: usize) -> Result<R, CorpusError> {
    let rec: R = serde_json::from_str(text).map_err(|source| {
        // serde reports validation failures from custom deserializers as data errors
        if source.is_data() {
            CorpusError::Invalid { line, reason: source.to_string() }
        } else {
            CorpusError::Json { line, source }
        }
    })?;
    rec.validate().map_err(|reason| CorpusError::Invalid { line, reason })?;
    Ok(rec)
}

/// Reads records from JSONL text. Blank lines are skipped.
pub fn read_jsonl_from<R: Record, B: BufRead>(reader: B) -> Result<Vec<R>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line.map_err(|source| CorpusError::Io { path: PathBuf::from("<reader>"), source })?;
        if text.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&text, line_no)?);
    }
    Ok(out)
}

pub fn read_jsonl<R: Record>(path: impl AsRef<Path>) -> Result<Vec<R>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
    read_jsonl_from(BufReader::new(file))
}

pub fn write_jsonl_to<R: Serialize, W: Write>(records: &[R], mut writer: W) -> io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut writer, rec)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_jsonl<R: Serialize>(records: &[R], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io { path: path.to_owned(), source };
    let file = File::create(path).map_err(io_err)?;
    write_jsonl_to(records, BufWriter::new(file)).map_err(io_err)
}

/// Reference and hypothesis for the same source sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub reference: GTransRecord,
    pub hypothesis: GTransRecord,
}

impl EvalPair {
    pub fn new(reference: GTransRecord, hypothesis: GTransRecord) -> Result<Self, String> {
        if reference.source.tokens != hypothesis.source.tokens {
            return Err("reference and hypothesis sources differ".into());
        }
        Ok(Self { reference, hypothesis })
    }
}

/// Pairs two parallel record lists by position.
pub fn pair_records(
    references: Vec<GTransRecord>,
    hypotheses: Vec<GTransRecord>,
) -> Result<Vec<EvalPair>, CorpusError> {
    if references.len() != hypotheses.len() {
        return Err(CorpusError::Mismatch {
            reason: format!("{} reference records but {} hypothesis records", references.len(), hypotheses.len()),
        });
    }
    references
        .into_iter()
        .zip(hypotheses)
        .enumerate()
        .map(|(i, (r, h))| EvalPair::new(r, h).map_err(|reason| CorpusError::Invalid { line: i + 1, reason }))
        .collect()
}

pub fn read_eval_pairs(
    reference: impl AsRef<Path>,
    hypothesis: impl AsRef<Path>,
) -> Result<Vec<EvalPair>, CorpusError> {
    pair_records(read_jsonl(reference)?, read_jsonl(hypothesis)?)
}

/// The bundled 50-record English–Spanish G-Trans corpus.
pub const TOY_GTRANS_ES: &str = include_str!("../data/toy_gtrans_es.jsonl");

/// Parses [`TOY_GTRANS_ES`].
pub fn toy_corpus() -> Vec<GTransRecord> {
    read_jsonl_from(TOY_GTRANS_ES.as_bytes()).expect("bundled corpus is valid")
}
