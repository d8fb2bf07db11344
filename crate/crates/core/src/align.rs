//! Gender alignments between target structures and source entities.
//!
//! Covers the attention-based view (argmax over a cross-attention row at each
//! `<MID>` position, and the supervised alignment loss), the marker inputs fed
//! to an external per-structure tagger, and a deterministic heuristic aligner
//! for runs without any model.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AnnotatedSource;
use crate::derive::AlignmentMap;
use crate::lexicon::lower;
use crate::structure::{split, Segment, StructuredTranslation};

/// Token wrapped around the structure being aligned.
pub const STRUCTURE_MARK: &str = "|";
/// Token separating source and target in a concatenated tagger input.
pub const CONCAT_SEPARATOR: &str = ";";

const ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("score matrix row {row} sums to {sum}, expected 1")]
    RowNotNormalized { row: usize, sum: f64 },
    #[error("score matrix entry ({row}, {col}) = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("score matrix rows have unequal lengths")]
    Ragged,
    #[error("MID position {position} is outside a {rows}-row score matrix")]
    MidOutOfRange { position: usize, rows: usize },
    #[error("{mids} MID positions but {gold} gold alignments")]
    CountMismatch { mids: usize, gold: usize },
    #[error("alignment loss needs at least one structure")]
    NoStructures,
    #[error("source index {index} is outside a {cols}-column score matrix")]
    SourceOutOfRange { index: usize, cols: usize },
    #[error("zero attention probability at supervised cell ({row}, {col})")]
    ZeroProbability { row: usize, col: usize },
    #[error("negative loss scale {0}")]
    NegativeLambda(f64),
    #[error("no ambiguous entities to align to")]
    NoAmbiguousEntities,
    #[error("aligner marked {marked} entity heads, expected exactly one")]
    AmbiguousTaggerOutput { marked: usize },
    #[error("aligner returned {got} labels for {expected} source tokens")]
    TaggerLength { got: usize, expected: usize },
}

/// Row-stochastic attention matrix: `rows` target positions × `cols` source positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, AlignError> {
        let cols = rows.first().map_or(0, Vec::len);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(AlignError::Ragged);
            }
            for (c, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(AlignError::EntryOutOfRange { row: r, col: c, value });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(AlignError::RowNotNormalized { row: r, sum });
            }
        }
        Ok(Self { rows })
    }

    /// Normalizes non-negative row weights into probabilities.
    pub fn from_weights(weights: Vec<Vec<f64>>) -> Result<Self, AlignError> {
        let rows = weights
            .into_iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.into_iter().map(|w| w / total).collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.rows[row]
    }
}

/// Source position with the highest attention at each `<MID>` row; ties go
/// to the smallest index.
pub fn infer_alignments(scores: &ScoreMatrix, mids: &[usize]) -> Result<Vec<usize>, AlignError> {
    mids.iter()
        .map(|&m| {
            if m >= scores.rows() {
                return Err(AlignError::MidOutOfRange { position: m, rows: scores.rows() });
            }
            let row = scores.row(m);
            let mut best = 0;
            for (s, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = s;
                }
            }
            Ok(best)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub lambda: f64,
}

impl LossConfig {
    pub fn new(lambda: f64) -> Result<Self, AlignError> {
        if lambda < 0.0 || lambda.is_nan() {
            return Err(AlignError::NegativeLambda(lambda));
        }
        Ok(Self { lambda })
    }
}

impl Default for LossConfig {
    /// The scaling used when training the end-to-end models.
    fn default() -> Self {
        Self { lambda: 0.05 }
    }
}

/// `L = L_ce - (lambda / k) * sum_i ln P[m_i][a_i]`.
pub fn alignment_loss(
    scores: &ScoreMatrix,
    mids: &[usize],
    gold: &[usize],
    cross_entropy: f64,
    cfg: LossConfig,
) -> Result<f64, AlignError> {
    if mids.len() != gold.len() {
        return Err(AlignError::CountMismatch { mids: mids.len(), gold: gold.len() });
    }
    if mids.is_empty() {
        return Err(AlignError::NoStructures);
    }
    let mut log_sum = 0.0;
    for (&m, &a) in mids.iter().zip(gold) {
        if m >= scores.rows() {
            return Err(AlignError::MidOutOfRange { position: m, rows: scores.rows() });
        }
        if a >= scores.cols() {
            return Err(AlignError::SourceOutOfRange { index: a, cols: scores.cols() });
        }
        let p = scores.get(m, a);
        if p <= 0.0 {
            return Err(AlignError::ZeroProbability { row: m, col: a });
        }
        log_sum += p.ln();
    }
    Ok(cross_entropy - cfg.lambda / mids.len() as f64 * log_sum)
}

/// Masculine surface with the `index`-th structure wrapped in `|` tokens.
pub fn marked_target(ys: &StructuredTranslation, index: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut k = 0;
    for seg in ys.segments() {
        match seg {
            Segment::Token(t) => out.push(t.clone()),
            Segment::Structure(s) => {
                if k == index {
                    out.push(STRUCTURE_MARK.to_owned());
                    out.extend_from_slice(s.masculine());
                    out.push(STRUCTURE_MARK.to_owned());
                } else {
                    out.extend_from_slice(s.masculine());
                }
                k += 1;
            }
        }
    }
    out
}

/// One tagger input per structure: source tokens, `;`, then the marked target.
pub fn prepare_marker_inputs(source: &AnnotatedSource, ys: &StructuredTranslation) -> Vec<Vec<String>> {
    (0..ys.structure_count())
        .map(|i| {
            let mut seq = source.tokens.clone();
            seq.push(CONCAT_SEPARATOR.to_owned());
            seq.extend(marked_target(ys, i));
            seq
        })
        .collect()
}

/// Source word → target phrases it usually translates to (lowercased).
#[derive(Debug, Clone, Default)]
pub struct AlignmentHints {
    map: HashMap<String, Vec<Vec<String>>>,
}

impl AlignmentHints {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source_word: &str, target_phrase: &str) {
        let phrase: Vec<String> = target_phrase.split_whitespace().map(str::to_lowercase).collect();
        if !phrase.is_empty() {
            self.map.entry(source_word.to_lowercase()).or_default().push(phrase);
        }
    }

    /// TSV: source word, TAB, target phrase.
    pub fn parse_tsv(text: &str) -> Result<Self, String> {
        let mut hints = Self::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, tgt) =
                line.split_once('\t').ok_or_else(|| format!("hint line {}: expected source<TAB>target", idx + 1))?;
            hints.insert(src.trim(), tgt);
        }
        Ok(hints)
    }

    fn matches(&self, source_word: &str, side: &[String]) -> bool {
        let side = lower(side);
        self.map
            .get(&source_word.to_lowercase())
            .is_some_and(|phrases| phrases.iter().any(|p| side.windows(p.len()).any(|w| w == p.as_slice())))
    }
}

const DETERMINERS: &[&str] = &[
    "el", "la", "los", "las", "un", "una", "unos", "unas", "al", "del", "lo", "le", "les", "il", "gli", "uno", "der",
    "die", "das", "den", "dem", "des", "ein", "eine", "einen", "einem", "einer", "o", "os", "um", "uma", "do", "da",
    "no", "na", "ao", "à",
];

/// Possessives that open a noun phrase without being part of a structure.
const POSSESSIVES: &[&str] = &["su", "sus", "mi", "mis", "tu", "tus", "nuestro", "nuestra", "vuestro", "vuestra"];

fn opens_noun_phrase(side: &[String]) -> bool {
    side.first().is_some_and(|t| DETERMINERS.contains(&t.to_lowercase().as_str()))
}

fn opens_after(prev: Option<&String>) -> bool {
    prev.is_some_and(|t| {
        let t = t.to_lowercase();
        DETERMINERS.contains(&t.as_str()) || POSSESSIVES.contains(&t.as_str())
    })
}

/// Deterministic aligner used when no trained model is available.
///
/// A structure whose masculine or feminine side contains a hinted
/// translation of an entity's head word goes to that entity. Otherwise
/// structures are grouped into regions, each starting at the first structure
/// or at one that opens a noun phrase (its side starts with a determiner, or
/// the token before it is a determiner or possessive). A region goes to the
/// entity whose head sits closest, in relative position, to where the region
/// starts in the masculine surface.
///
/// Every entity is a candidate, not only the ambiguous ones: structures that
/// land on a fixed-gender entity are returned as such so the caller can
/// resolve them (see [`crate::pipeline::Pipeline::augment`]).
pub fn heuristic_align(
    source: &AnnotatedSource,
    ys: &StructuredTranslation,
    hints: Option<&AlignmentHints>,
) -> Result<AlignmentMap, AlignError> {
    if source.ambiguous().is_empty() {
        return Err(AlignError::NoAmbiguousEntities);
    }
    let relative = |i: usize, n: usize| (i as f64 + 0.5) / n as f64;
    let heads: Vec<f64> = source.entities.iter().map(|e| relative(e.head_index, source.tokens.len())).collect();
    let target_len = split(ys).0.len().max(1);
    let nearest = |pos: f64| {
        (0..heads.len())
            .min_by(|&a, &b| (heads[a] - pos).abs().total_cmp(&(heads[b] - pos).abs()))
            .expect("at least one entity")
    };

    let mut out = Vec::new();
    let mut region_entity: Option<usize> = None;
    let mut offset = 0;
    let mut prev: Option<&String> = None;
    for seg in ys.segments() {
        match seg {
            Segment::Token(t) => {
                offset += 1;
                prev = Some(t);
            }
            Segment::Structure(s) => {
                let opens = opens_noun_phrase(s.masculine()) || opens_noun_phrase(s.feminine()) || opens_after(prev);
                let entity = match region_entity {
                    Some(e) if !opens => e,
                    _ => nearest(relative(offset, target_len)),
                };
                region_entity = Some(entity);
                let hinted = hints.and_then(|h| {
                    (0..source.entities.len()).find(|&e| {
                        let head = source.head_word(e).expect("entity exists");
                        h.matches(head, s.masculine()) || h.matches(head, s.feminine())
                    })
                });
                out.push(hinted.unwrap_or(entity));
                offset += s.masculine().len();
                prev = s.masculine().last();
            }
        }
    }
    Ok(AlignmentMap::new(out))
}

/// Request sent to an external per-structure aligner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignerRequest {
    pub x: Vec<String>,
    #[serde(rename = "yA")]
    pub y_a: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignerResponse {
    pub aligned: Vec<u8>,
}

/// Requests for every structure of `ys`, in structure order.
pub fn aligner_requests(source: &AnnotatedSource, ys: &StructuredTranslation) -> Vec<AlignerRequest> {
    (0..ys.structure_count()).map(|i| AlignerRequest { x: source.tokens.clone(), y_a: marked_target(ys, i) }).collect()
}

/// Maps a 0/1 tag vector over source tokens to the one ambiguous entity whose
/// head is tagged.
pub fn entity_from_tags(source: &AnnotatedSource, response: &AlignerResponse) -> Result<usize, AlignError> {
    if response.aligned.len() != source.tokens.len() {
        return Err(AlignError::TaggerLength { got: response.aligned.len(), expected: source.tokens.len() });
    }
    let marked: Vec<usize> =
        source.ambiguous().into_iter().filter(|&e| response.aligned[source.entities[e].head_index] != 0).collect();
    match marked.as_slice() {
        [e] => Ok(*e),
        _ => Err(AlignError::AmbiguousTaggerOutput { marked: marked.len() }),
    }
}

/// Sanity check that the masculine surface of the marked input matches `ys`.
pub fn unmarked(marked: &[String]) -> Vec<String> {
    marked.iter().filter(|t| *t != STRUCTURE_MARK).cloned().collect()
}

#[doc(hidden)]
pub fn masculine_surface(ys: &StructuredTranslation) -> Vec<String> {
    split(ys).0.tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{toy_corpus, EntityAnnotation, EntityLabel};
    use crate::structure::parse;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn argmax_row() {
        let p = ScoreMatrix::new(vec![vec![1.0, 0.0, 0.0], vec![0.1, 0.7, 0.2]]).unwrap();
        assert_eq!(infer_alignments(&p, &[1]).unwrap(), vec![1]);
        assert_eq!(infer_alignments(&p, &[0, 1]).unwrap(), vec![0, 1]);
        assert!(matches!(infer_alignments(&p, &[2]), Err(AlignError::MidOutOfRange { .. })));
    }

    #[test]
    fn argmax_ties_go_left() {
        let p = ScoreMatrix::new(vec![vec![0.25, 0.375, 0.375]]).unwrap();
        assert_eq!(infer_alignments(&p, &[0]).unwrap(), vec![1]);
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(ScoreMatrix::new(vec![vec![0.5, 0.4]]), Err(AlignError::RowNotNormalized { .. })));
        assert!(matches!(ScoreMatrix::new(vec![vec![1.5, -0.5]]), Err(AlignError::EntryOutOfRange { .. })));
        assert!(matches!(ScoreMatrix::new(vec![vec![1.0], vec![0.5, 0.5]]), Err(AlignError::Ragged)));
    }

    #[test]
    fn loss_reduces_to_cross_entropy() {
        let p = ScoreMatrix::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let zero = LossConfig::new(0.0).unwrap();
        assert_eq!(alignment_loss(&p, &[0], &[1], 2.5, zero).unwrap(), 2.5);
        assert_eq!(alignment_loss(&p, &[1], &[0], 2.5, LossConfig::default()).unwrap(), 2.5);
        assert!(matches!(
            alignment_loss(&p, &[1], &[1], 2.5, LossConfig::default()),
            Err(AlignError::ZeroProbability { row: 1, col: 1 })
        ));
        assert!(matches!(alignment_loss(&p, &[], &[], 1.0, zero), Err(AlignError::NoStructures)));
        assert!(LossConfig::new(-0.1).is_err());
    }

    #[test]
    fn marker_inputs_doctor_patient() {
        let rec = &toy_corpus()[1];
        let inputs = prepare_marker_inputs(&rec.source, &rec.target);
        assert_eq!(inputs.len(), 3);
        assert_eq!(
            inputs[0].join(" "),
            "The doctor was angry with the patient ; | El doctor | estaba enojado con el paciente"
        );
        for input in &inputs {
            assert_eq!(input.iter().filter(|t| *t == STRUCTURE_MARK).count(), 2);
            let sep = input.iter().position(|t| t == CONCAT_SEPARATOR).unwrap();
            assert_eq!(unmarked(&input[sep + 1..]), masculine_surface(&rec.target));
        }
    }

    #[test]
    fn single_entity_takes_everything() {
        let src = AnnotatedSource::new(
            toks("The judge is busy ."),
            vec![EntityAnnotation { head_index: 1, label: EntityLabel::Ambiguous }],
        )
        .unwrap();
        let ys = parse(&toks("<BEG> El juez <MID> La jueza <END> está <BEG> ocupado <MID> ocupada <END> .")).unwrap();
        assert_eq!(heuristic_align(&src, &ys, None).unwrap().by_structure, vec![0, 0]);
    }

    #[test]
    fn hint_aligns_lawyer_judge() {
        let rec = &toy_corpus()[2];
        let mut hints = AlignmentHints::new();
        hints.insert("judge", "juez");
        let a = heuristic_align(&rec.source, &rec.target, Some(&hints)).unwrap();
        assert_eq!(a.by_structure[2], 2);
    }

    #[test]
    fn monotone_fallback_secretary_boss() {
        let rec = &toy_corpus()[0];
        let a = heuristic_align(&rec.source, &rec.target, None).unwrap();
        assert_eq!(a, rec.alignments);
        assert_eq!(a.by_structure, vec![0, 0, 1]);
    }

    #[test]
    fn no_ambiguous_entities_is_an_error() {
        let src = AnnotatedSource::new(
            toks("She is a boss"),
            vec![EntityAnnotation { head_index: 3, label: EntityLabel::Feminine }],
        )
        .unwrap();
        let ys = parse(&toks("Ella es una jefa")).unwrap();
        assert_eq!(heuristic_align(&src, &ys, None), Err(AlignError::NoAmbiguousEntities));
    }

    #[test]
    fn tagger_output_to_entity() {
        let rec = &toy_corpus()[1];
        let one = AlignerResponse { aligned: vec![0, 1, 0, 0, 0, 0, 0] };
        assert_eq!(entity_from_tags(&rec.source, &one).unwrap(), 0);
        let none = AlignerResponse { aligned: vec![0; 7] };
        assert!(matches!(entity_from_tags(&rec.source, &none), Err(AlignError::AmbiguousTaggerOutput { marked: 0 })));
        let both = AlignerResponse { aligned: vec![0, 1, 0, 0, 0, 0, 1] };
        assert!(matches!(entity_from_tags(&rec.source, &both), Err(AlignError::AmbiguousTaggerOutput { marked: 2 })));
        let short = AlignerResponse { aligned: vec![1] };
        assert!(matches!(entity_from_tags(&rec.source, &short), Err(AlignError::TaggerLength { .. })));
    }
}
