//! Gender-assignment-tagged fine-tuning bi-text extracted from G-Trans records.
//!
//! Each ambiguous head word in the source is followed by a separate `<M>` or
//! `<F>` token and the target is the alternative derived for that assignment.
//! Output TSV: tagged source, TAB, target, both space-joined.

use std::io::{self, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{AnnotatedSource, GTransRecord};
use crate::derive::{assignment_from_code, derive, DeriveError, GenderAssignment};
use crate::structure::{Gender, PlainTranslation};

pub const MASC_TAG: &str = "<M>";
pub const FEM_TAG: &str = "<F>";

/// Largest assignment space sampled from: `2^MAX_SAMPLED_ENTITIES` assignments.
pub const MAX_SAMPLED_ENTITIES: usize = 62;

pub fn gender_tag(gender: Gender) -> &'static str {
    match gender {
        Gender::Masculine => MASC_TAG,
        Gender::Feminine => FEM_TAG,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitextError {
    #[error("ambiguous entity {entity} has no gender assignment")]
    MissingAssignment { entity: usize },
    #[error("{count} ambiguous entities is more than the supported {MAX_SAMPLED_ENTITIES}")]
    TooManyEntities { count: usize },
    #[error(transparent)]
    Derive(#[from] DeriveError),
}

/// Source tokens with gender tags after the ambiguous head words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedSource {
    pub tokens: Vec<String>,
}

impl TaggedSource {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn tag_source(source: &AnnotatedSource, assignment: &GenderAssignment) -> Result<TaggedSource, BitextError> {
    let mut tags: Vec<Option<Gender>> = vec![None; source.tokens.len()];
    for entity in source.ambiguous() {
        let gender = assignment.get(entity).ok_or(BitextError::MissingAssignment { entity })?;
        tags[source.entities[entity].head_index] = Some(gender);
    }
    let mut tokens = Vec::with_capacity(source.tokens.len() + tags.len());
    for (tok, tag) in source.tokens.iter().zip(tags) {
        tokens.push(tok.clone());
        if let Some(g) = tag {
            tokens.push(gender_tag(g).to_owned());
        }
    }
    Ok(TaggedSource { tokens })
}

/// One fine-tuning example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitextRow {
    pub assignment: GenderAssignment,
    pub source: TaggedSource,
    pub target: PlainTranslation,
}

/// Tagged bi-text rows for a record: all-masculine, all-feminine, then up to
/// `max_extra` distinct mixed assignments sampled without replacement.
///
/// Sampled assignments are emitted in enumeration order (first ambiguous
/// entity most significant, masculine before feminine).
pub fn extract_bitext(rec: &GTransRecord, max_extra: usize, seed: u64) -> Result<Vec<BitextRow>, BitextError> {
    let entities = rec.source.ambiguous_by_head();
    let d = entities.len();
    if d > MAX_SAMPLED_ENTITIES {
        return Err(BitextError::TooManyEntities { count: d });
    }
    let row = |assignment: GenderAssignment| -> Result<BitextRow, BitextError> {
        let source = tag_source(&rec.source, &assignment)?;
        let target = derive(&rec.target, &rec.alignments, &assignment)?;
        Ok(BitextRow { assignment, source, target })
    };
    if d == 0 {
        return Ok(vec![row(GenderAssignment::new())?]);
    }
    let mut rows = vec![
        row(GenderAssignment::uniform(entities.iter().copied(), Gender::Masculine))?,
        row(GenderAssignment::uniform(entities.iter().copied(), Gender::Feminine))?,
    ];
    // codes 1..2^d-1 are the mixed assignments
    let mixed = (1u64 << d) - 2;
    let take = (max_extra as u64).min(mixed);
    if take > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = usize::try_from(mixed).map_err(|_| BitextError::TooManyEntities { count: d })?;
        let mut codes: Vec<u64> =
            index::sample(&mut rng, space, take as usize).into_iter().map(|i| i as u64 + 1).collect();
        codes.sort_unstable();
        for code in codes {
            rows.push(row(assignment_from_code(&entities, code))?);
        }
    }
    Ok(rows)
}

/// Per-record seed for batch extraction, independent of processing order.
pub fn record_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn write_tsv<W: Write>(rows: &[BitextRow], mut out: W) -> io::Result<()> {
    for r in rows {
        writeln!(out, "{}\t{}", r.source.text(), r.target.text())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toy_corpus;
    use crate::derive::{check_agreement, Agreement};

    #[test]
    fn tags_follow_head_words() {
        let rec = &toy_corpus()[1];
        let g = GenderAssignment::new().with(0, Gender::Masculine).with(1, Gender::Feminine);
        assert_eq!(tag_source(&rec.source, &g).unwrap().text(), "The doctor <M> was angry with the patient <F>");
        let partial = GenderAssignment::new().with(0, Gender::Masculine);
        assert_eq!(tag_source(&rec.source, &partial), Err(BitextError::MissingAssignment { entity: 1 }));
    }

    #[test]
    fn no_ambiguity_leaves_source_untouched() {
        let src = AnnotatedSource::new(vec!["She".into(), "is".into()], vec![]).unwrap();
        assert_eq!(tag_source(&src, &GenderAssignment::new()).unwrap().tokens, src.tokens);
    }

    #[test]
    fn single_entity_has_two_rows() {
        let rec = toy_corpus().into_iter().find(|r| r.source.ambiguous().len() == 1).unwrap();
        assert_eq!(extract_bitext(&rec, 3, 0).unwrap().len(), 2);
    }

    #[test]
    fn three_entities_five_rows_in_agreement() {
        let rec = toy_corpus().into_iter().find(|r| r.source.ambiguous().len() == 3).unwrap();
        let rows = extract_bitext(&rec, 3, 11).unwrap();
        assert_eq!(rows.len(), 5);
        let distinct: std::collections::HashSet<_> = rows.iter().map(|r| r.assignment.clone()).collect();
        assert_eq!(distinct.len(), 5);
        for r in &rows {
            match check_agreement(&rec.target, &rec.alignments, &r.target) {
                Agreement::Consistent(g) => assert_eq!(g, r.assignment.restricted_to(&rec.alignments.entities())),
                Agreement::Inconsistent => panic!("row {} inconsistent", r.target),
            }
        }
        assert_eq!(rows, extract_bitext(&rec, 3, 11).unwrap());
    }
}
