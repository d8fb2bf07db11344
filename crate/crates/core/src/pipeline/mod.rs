//! Data augmentation: detect ambiguous entities, produce all-masculine and
//! all-feminine translations, group them into a structured translation and
//! align its structures.
//!
//! Each stage is a trait with a gold, a rule/lexicon based and an external
//! adapter implementation, so the pipeline runs with or without models.

mod adapter;
mod detect;
mod prompt;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapter::{
    AdapterAligner, AdapterDetector, AdapterTransformer, SubprocessTransport, Transport, TransportError,
};
pub use detect::{NounClass, NounList, RuleDetector, DEFAULT_PRONOUN_WINDOW, NOUNS_EN};
pub use prompt::{build_editor_prompt, EditorAdapterConfig, Exemplar, PromptPreset, DEFAULT_EXEMPLARS};

use crate::align::{heuristic_align, AlignError, AlignmentHints};
use crate::bitext::{tag_source, BitextError, TaggedSource};
use crate::corpus::{AnnotatedSource, EntityAnnotation, EntityLabel, GTransRecord};
use crate::derive::{AlignmentMap, GenderAssignment};
use crate::group::{group, GroupError};
use crate::lattice::{make_variants, NgramModel, TagFollowingScorer};
use crate::lexicon::InflectionLexicon;
use crate::structure::{split, Gender, PlainTranslation, Segment, StructuredTranslation};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("detector returned {got} labels for {expected} tokens")]
    LabelCount { got: usize, expected: usize },
    #[error("detector: {0}")]
    Detector(String),
    #[error("transformer: {0}")]
    Transformer(String),
    #[error("aligner: {0}")]
    Aligner(String),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Bitext(#[from] BitextError),
    #[error("invalid output record: {0}")]
    InvalidRecord(String),
}

/// Per-token source label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceLabel {
    /// Head of a gender-ambiguous entity.
    A,
    /// Head of a masculine entity.
    M,
    /// Head of a feminine entity.
    F,
    /// Not an entity head.
    N,
}

impl SourceLabel {
    fn entity_label(self) -> Option<EntityLabel> {
        match self {
            SourceLabel::A => Some(EntityLabel::Ambiguous),
            SourceLabel::M => Some(EntityLabel::Masculine),
            SourceLabel::F => Some(EntityLabel::Feminine),
            SourceLabel::N => None,
        }
    }
}

/// Entity annotations from per-token labels, in head order.
pub fn entities_from_labels(labels: &[SourceLabel]) -> Vec<EntityAnnotation> {
    labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.entity_label().map(|label| EntityAnnotation { head_index: i, label }))
        .collect()
}

/// Per-token labels for annotated entities.
pub fn labels_from_source(source: &AnnotatedSource) -> Vec<SourceLabel> {
    let mut labels = vec![SourceLabel::N; source.tokens.len()];
    for e in &source.entities {
        labels[e.head_index] = match e.label {
            EntityLabel::Ambiguous => SourceLabel::A,
            EntityLabel::Masculine => SourceLabel::M,
            EntityLabel::Feminine => SourceLabel::F,
        };
    }
    labels
}

pub trait Detector: Sync {
    fn annotate(&self, tokens: &[String]) -> Result<Vec<SourceLabel>, PipelineError>;
}

pub trait Transformer: Sync {
    /// All-masculine and all-feminine translations given the two tagged sources.
    fn variants(
        &self,
        x_masculine: &TaggedSource,
        x_feminine: &TaggedSource,
        base: &PlainTranslation,
    ) -> Result<(PlainTranslation, PlainTranslation), PipelineError>;
}

pub trait Aligner: Sync {
    fn align(&self, source: &AnnotatedSource, ys: &StructuredTranslation) -> Result<AlignmentMap, PipelineError>;
}

// ---------------------------------------------------------------------------
// Gold and oracle stages

/// Looks up annotations of known source sentences.
#[derive(Debug, Clone, Default)]
pub struct GoldDetector {
    labels: HashMap<Vec<String>, Vec<SourceLabel>>,
}

impl GoldDetector {
    pub fn new<'a>(sources: impl IntoIterator<Item = &'a AnnotatedSource>) -> Self {
        Self { labels: sources.into_iter().map(|s| (s.tokens.clone(), labels_from_source(s))).collect() }
    }
}

impl Detector for GoldDetector {
    fn annotate(&self, tokens: &[String]) -> Result<Vec<SourceLabel>, PipelineError> {
        self.labels
            .get(tokens)
            .cloned()
            .ok_or_else(|| PipelineError::Detector(format!("no gold annotation for {:?}", tokens.join(" "))))
    }
}

fn untagged(x: &TaggedSource) -> Vec<String> {
    x.tokens.iter().filter(|t| *t != crate::bitext::MASC_TAG && *t != crate::bitext::FEM_TAG).cloned().collect()
}

/// Returns the split of a known structured translation.
#[derive(Debug, Clone, Default)]
pub struct OracleTransformer {
    variants: HashMap<Vec<String>, (PlainTranslation, PlainTranslation)>,
}

impl OracleTransformer {
    pub fn new<'a>(records: impl IntoIterator<Item = &'a GTransRecord>) -> Self {
        Self { variants: records.into_iter().map(|r| (r.source.tokens.clone(), split(&r.target))).collect() }
    }
}

impl Transformer for OracleTransformer {
    fn variants(
        &self,
        x_masculine: &TaggedSource,
        _x_feminine: &TaggedSource,
        _base: &PlainTranslation,
    ) -> Result<(PlainTranslation, PlainTranslation), PipelineError> {
        let key = untagged(x_masculine);
        self.variants
            .get(&key)
            .cloned()
            .ok_or_else(|| PipelineError::Transformer(format!("no reference for {:?}", key.join(" "))))
    }
}

/// Returns the reference alignments when the grouped structures match the
/// reference structures.
#[derive(Debug, Clone, Default)]
pub struct GoldAligner {
    records: HashMap<Vec<String>, (StructuredTranslation, AlignmentMap)>,
}

impl GoldAligner {
    pub fn new<'a>(records: impl IntoIterator<Item = &'a GTransRecord>) -> Self {
        Self {
            records: records
                .into_iter()
                .map(|r| (r.source.tokens.clone(), (r.target.clone(), r.alignments.clone())))
                .collect(),
        }
    }
}

impl Aligner for GoldAligner {
    fn align(&self, source: &AnnotatedSource, ys: &StructuredTranslation) -> Result<AlignmentMap, PipelineError> {
        let (target, alignments) = self
            .records
            .get(&source.tokens)
            .ok_or_else(|| PipelineError::Aligner(format!("no reference for {:?}", source.tokens.join(" "))))?;
        if !target.structures().eq(ys.structures()) {
            return Err(PipelineError::Aligner("structures differ from the reference".into()));
        }
        Ok(alignments.clone())
    }
}

// ---------------------------------------------------------------------------
// Model-free stages

/// Sequence scorer behind [`LatticeTransformer`].
#[derive(Debug, Clone, Default)]
pub enum LatticeScoring {
    /// Follow the `<M>`/`<F>` tags of the source via the lexicon.
    #[default]
    TagFollowing,
    /// An n-gram model over tagged source followed by target.
    Ngram(NgramModel),
}

/// Rewrites the base translation by decoding over its inflection lattice.
#[derive(Debug, Clone)]
pub struct LatticeTransformer {
    pub lexicon: InflectionLexicon,
    pub scoring: LatticeScoring,
    pub beam: usize,
}

impl LatticeTransformer {
    pub fn new(lexicon: InflectionLexicon) -> Self {
        Self { lexicon, scoring: LatticeScoring::TagFollowing, beam: 4 }
    }
}

impl Transformer for LatticeTransformer {
    fn variants(
        &self,
        x_masculine: &TaggedSource,
        x_feminine: &TaggedSource,
        base: &PlainTranslation,
    ) -> Result<(PlainTranslation, PlainTranslation), PipelineError> {
        Ok(match &self.scoring {
            LatticeScoring::TagFollowing => make_variants(
                base,
                &self.lexicon,
                &TagFollowingScorer::new(&self.lexicon, &x_masculine.tokens),
                &TagFollowingScorer::new(&self.lexicon, &x_feminine.tokens),
                self.beam,
            ),
            LatticeScoring::Ngram(model) => make_variants(
                base,
                &self.lexicon,
                &model.conditioned(&x_masculine.tokens),
                &model.conditioned(&x_feminine.tokens),
                self.beam,
            ),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct HeuristicAligner {
    pub hints: Option<AlignmentHints>,
}

impl Aligner for HeuristicAligner {
    fn align(&self, source: &AnnotatedSource, ys: &StructuredTranslation) -> Result<AlignmentMap, PipelineError> {
        Ok(heuristic_align(source, ys, self.hints.as_ref())?)
    }
}

// ---------------------------------------------------------------------------
// Orchestration

/// Replaces each structure aligned to an entity of known gender by that
/// gender's side, dropping it from the alignment.
///
/// Model-free transformers vary every inflectable word, including those
/// describing people whose gender the source already fixes.
pub fn resolve_fixed_entities(
    source: &AnnotatedSource,
    ys: &StructuredTranslation,
    alignments: &AlignmentMap,
) -> Result<(StructuredTranslation, AlignmentMap), PipelineError> {
    if alignments.len() != ys.structure_count() {
        return Err(PipelineError::InvalidRecord(format!(
            "{} alignments for {} gender structures",
            alignments.len(),
            ys.structure_count()
        )));
    }
    let mut segments = Vec::with_capacity(ys.segments().len());
    let mut kept = Vec::new();
    let mut k = 0;
    for seg in ys.segments() {
        let Segment::Structure(s) = seg else {
            segments.push(seg.clone());
            continue;
        };
        let entity = alignments.by_structure[k];
        k += 1;
        let label = source
            .entities
            .get(entity)
            .ok_or_else(|| PipelineError::InvalidRecord(format!("structure aligned to missing entity {entity}")))?
            .label;
        match label.gender() {
            Some(g) => segments.extend(s.side(g).iter().cloned().map(Segment::Token)),
            None => {
                segments.push(seg.clone());
                kept.push(entity);
            }
        }
    }
    let ys = StructuredTranslation::new(segments).map_err(|e| PipelineError::InvalidRecord(e.to_string()))?;
    Ok((ys, AlignmentMap::new(kept)))
}

/// Result of augmenting one sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Augmented {
    Record(GTransRecord),
    /// No ambiguous entity, or no valid gender structures: the base
    /// translation is kept unchanged.
    Passthrough {
        src: Vec<String>,
        #[serde(rename = "yB")]
        base: PlainTranslation,
    },
}

impl Augmented {
    pub fn record(&self) -> Option<&GTransRecord> {
        match self {
            Augmented::Record(r) => Some(r),
            Augmented::Passthrough { .. } => None,
        }
    }
}

/// The three stages and the inflection lexicon used for grouping.
pub struct Pipeline<'a> {
    pub detector: &'a dyn Detector,
    pub transformer: &'a dyn Transformer,
    pub aligner: &'a dyn Aligner,
    pub lexicon: &'a InflectionLexicon,
}

impl Pipeline<'_> {
    pub fn augment(&self, source: &[String], base: &PlainTranslation) -> Result<Augmented, PipelineError> {
        let passthrough = || Augmented::Passthrough { src: source.to_vec(), base: base.clone() };
        let labels = self.detector.annotate(source)?;
        if labels.len() != source.len() {
            return Err(PipelineError::LabelCount { got: labels.len(), expected: source.len() });
        }
        let annotated = AnnotatedSource::new(source.to_vec(), entities_from_labels(&labels))
            .map_err(PipelineError::InvalidRecord)?;
        let ambiguous = annotated.ambiguous();
        if ambiguous.is_empty() {
            log::debug!("passthrough: no ambiguous entity in {:?}", source.join(" "));
            return Ok(passthrough());
        }
        let x_m = tag_source(&annotated, &GenderAssignment::uniform(ambiguous.iter().copied(), Gender::Masculine))?;
        let x_f = tag_source(&annotated, &GenderAssignment::uniform(ambiguous.iter().copied(), Gender::Feminine))?;
        let (y_m, y_f) = self.transformer.variants(&x_m, &x_f, base)?;
        let ys = match group(&y_m, &y_f, self.lexicon) {
            Ok(ys) if ys.has_structures() => ys,
            Ok(_) => return Ok(passthrough()),
            Err(GroupError::Ungroupable { .. }) => {
                log::debug!("passthrough: ungroupable variants for {:?}", source.join(" "));
                return Ok(passthrough());
            }
        };
        let alignments = self.aligner.align(&annotated, &ys)?;
        let (ys, alignments) = resolve_fixed_entities(&annotated, &ys, &alignments)?;
        if !ys.has_structures() {
            log::debug!("passthrough: every structure belongs to a fixed-gender entity");
            return Ok(passthrough());
        }
        let record = GTransRecord::new(annotated, ys, alignments).map_err(PipelineError::InvalidRecord)?;
        Ok(Augmented::Record(record))
    }

    /// Augments every pair; results keep input order and a failing pair
    /// never stops the rest. `threads` bounds the parallelism.
    pub fn augment_batch(
        &self,
        inputs: &[(Vec<String>, PlainTranslation)],
        threads: Option<usize>,
    ) -> Vec<Result<Augmented, PipelineError>> {
        let run = || inputs.par_iter().map(|(x, y)| self.augment(x, y)).collect();
        match threads {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                Ok(pool) => pool.install(run),
                Err(e) => {
                    log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                    run()
                }
            },
            None => run(),
        }
    }
}
