//! Deriving concrete alternatives from a structured translation and its
//! gender alignments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::{Gender, GenderStructure, PlainTranslation, Segment, StructuredTranslation};

/// Largest number of distinct aligned entities [`enumerate_alternatives`] expands.
pub const MAX_ENUMERATED_ENTITIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeriveError {
    #[error("entity {entity} is aligned to a gender structure but has no gender assignment")]
    MissingAssignment { entity: usize },
    #[error("alignment has {alignments} entries but the translation has {structures} structures")]
    LengthMismatch { alignments: usize, structures: usize },
    #[error("{count} distinct aligned entities exceeds the enumeration limit of {MAX_ENUMERATED_ENTITIES}")]
    TooManyEntities { count: usize },
}

/// Structure index → entity-list index of the governing source entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlignmentMap {
    pub by_structure: Vec<usize>,
}

impl AlignmentMap {
    pub fn new(by_structure: Vec<usize>) -> Self {
        Self { by_structure }
    }

    pub fn len(&self) -> usize {
        self.by_structure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_structure.is_empty()
    }

    /// Distinct aligned entities in ascending index order.
    pub fn entities(&self) -> Vec<usize> {
        self.by_structure.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    fn check(&self, ys: &StructuredTranslation) -> Result<(), DeriveError> {
        let structures = ys.structure_count();
        if structures != self.len() {
            return Err(DeriveError::LengthMismatch { alignments: self.len(), structures });
        }
        Ok(())
    }
}

/// Gender choice for each (ambiguous) entity, keyed by entity-list index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenderAssignment {
    pub choice: BTreeMap<usize, Gender>,
}

impl GenderAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform<I: IntoIterator<Item = usize>>(entities: I, gender: Gender) -> Self {
        Self { choice: entities.into_iter().map(|e| (e, gender)).collect() }
    }

    pub fn with(mut self, entity: usize, gender: Gender) -> Self {
        self.choice.insert(entity, gender);
        self
    }

    pub fn get(&self, entity: usize) -> Option<Gender> {
        self.choice.get(&entity).copied()
    }

    /// Restriction to the given entities.
    pub fn restricted_to(&self, entities: &[usize]) -> Self {
        Self { choice: self.choice.iter().filter(|(e, _)| entities.contains(e)).map(|(&e, &g)| (e, g)).collect() }
    }
}

/// Surface translation for one gender assignment.
pub fn derive(
    ys: &StructuredTranslation,
    alignment: &AlignmentMap,
    assignment: &GenderAssignment,
) -> Result<PlainTranslation, DeriveError> {
    alignment.check(ys)?;
    for &entity in &alignment.by_structure {
        if assignment.get(entity).is_none() {
            return Err(DeriveError::MissingAssignment { entity });
        }
    }
    Ok(ys.realize(|k, _| assignment.get(alignment.by_structure[k]).expect("checked above")))
}

/// Every alternative of `ys`, one per assignment of the aligned entities.
///
/// Entities vary in ascending index order with the first entity most
/// significant and masculine before feminine, so the all-masculine
/// alternative comes first and the all-feminine one last.
pub fn enumerate_alternatives(
    ys: &StructuredTranslation,
    alignment: &AlignmentMap,
) -> Result<Vec<(GenderAssignment, PlainTranslation)>, DeriveError> {
    enumerate_in_order(ys, alignment, &alignment.entities())
}

/// Like [`enumerate_alternatives`], with entities varied in the given order.
pub fn enumerate_in_order(
    ys: &StructuredTranslation,
    alignment: &AlignmentMap,
    order: &[usize],
) -> Result<Vec<(GenderAssignment, PlainTranslation)>, DeriveError> {
    alignment.check(ys)?;
    if order.len() > MAX_ENUMERATED_ENTITIES {
        return Err(DeriveError::TooManyEntities { count: order.len() });
    }
    assignments(order).map(|g| derive(ys, alignment, &g).map(|y| (g, y))).collect()
}

/// All `2^d` assignments of `entities`, first entity most significant, `M` < `F`.
pub fn assignments(entities: &[usize]) -> impl Iterator<Item = GenderAssignment> + '_ {
    let d = entities.len();
    (0u64..(1u64 << d)).map(move |code| assignment_from_code(entities, code))
}

pub(crate) fn assignment_from_code(entities: &[usize], code: u64) -> GenderAssignment {
    let d = entities.len();
    GenderAssignment {
        choice: entities
            .iter()
            .enumerate()
            .map(|(j, &e)| {
                let bit = (code >> (d - 1 - j)) & 1;
                (e, if bit == 0 { Gender::Masculine } else { Gender::Feminine })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Agreement {
    /// The unique assignment of the aligned entities that derives the candidate.
    Consistent(GenderAssignment),
    Inconsistent,
}

/// Checks whether `candidate` is one of the alternatives of `(ys, alignment)`.
pub fn check_agreement(
    ys: &StructuredTranslation,
    alignment: &AlignmentMap,
    candidate: &PlainTranslation,
) -> Agreement {
    if alignment.check(ys).is_err() {
        return Agreement::Inconsistent;
    }
    let mut matcher = Matcher {
        segments: ys.segments(),
        alignment: &alignment.by_structure,
        candidate: &candidate.tokens,
        assignment: GenderAssignment::new(),
    };
    if matcher.walk(0, 0, 0) {
        Agreement::Consistent(matcher.assignment)
    } else {
        Agreement::Inconsistent
    }
}

struct Matcher<'a> {
    segments: &'a [Segment],
    alignment: &'a [usize],
    candidate: &'a [String],
    assignment: GenderAssignment,
}

impl Matcher<'_> {
    // Backtracks because one side of a structure may be a prefix of the other.
    fn walk(&mut self, seg: usize, pos: usize, k: usize) -> bool {
        let Some(segment) = self.segments.get(seg) else {
            return pos == self.candidate.len();
        };
        match segment {
            Segment::Token(t) => self.candidate.get(pos) == Some(t) && self.walk(seg + 1, pos + 1, k),
            Segment::Structure(s) => {
                let entity = self.alignment[k];
                let fixed = self.assignment.get(entity);
                for gender in [Gender::Masculine, Gender::Feminine] {
                    if fixed.is_some_and(|g| g != gender) || !side_matches(s, gender, &self.candidate[pos..]) {
                        continue;
                    }
                    if fixed.is_none() {
                        self.assignment.choice.insert(entity, gender);
                    }
                    if self.walk(seg + 1, pos + s.side(gender).len(), k + 1) {
                        return true;
                    }
                    if fixed.is_none() {
                        self.assignment.choice.remove(&entity);
                    }
                }
                false
            }
        }
    }
}

fn side_matches(s: &GenderStructure, gender: Gender, rest: &[String]) -> bool {
    rest.starts_with(s.side(gender))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse;

    fn secretary_boss() -> (StructuredTranslation, AlignmentMap) {
        let flat: Vec<&str> = "<BEG> El secretario <MID> La secretaria <END> estaba <BEG> enojado <MID> enojada <END> con <BEG> el jefe <MID> la jefa <END>"
            .split(' ')
            .collect();
        (parse(&flat).unwrap(), AlignmentMap::new(vec![0, 0, 1]))
    }

    #[test]
    fn derive_mixed_assignment() {
        let (ys, a) = secretary_boss();
        let g = GenderAssignment::new().with(0, Gender::Masculine).with(1, Gender::Feminine);
        assert_eq!(derive(&ys, &a, &g).unwrap().text(), "El secretario estaba enojado con la jefa");
    }

    #[test]
    fn derive_missing_assignment() {
        let (ys, a) = secretary_boss();
        let g = GenderAssignment::new().with(0, Gender::Masculine);
        assert_eq!(derive(&ys, &a, &g), Err(DeriveError::MissingAssignment { entity: 1 }));
    }

    #[test]
    fn derive_structure_free() {
        let ys = parse(&["Hola", "mundo"]).unwrap();
        let y = derive(&ys, &AlignmentMap::default(), &GenderAssignment::new()).unwrap();
        assert_eq!(y.text(), "Hola mundo");
    }

    #[test]
    fn enumerate_order_and_count() {
        let (ys, a) = secretary_boss();
        let alts = enumerate_alternatives(&ys, &a).unwrap();
        let texts: Vec<String> = alts.iter().map(|(_, y)| y.text()).collect();
        assert_eq!(
            texts,
            [
                "El secretario estaba enojado con el jefe",
                "El secretario estaba enojado con la jefa",
                "La secretaria estaba enojada con el jefe",
                "La secretaria estaba enojada con la jefa",
            ]
        );
    }

    #[test]
    fn enumerate_zero_entities() {
        let ys = parse(&["Hola"]).unwrap();
        let alts = enumerate_alternatives(&ys, &AlignmentMap::default()).unwrap();
        assert_eq!(alts.len(), 1);
        assert_eq!(alts[0].1.text(), "Hola");
    }

    #[test]
    fn enumerate_cap() {
        let mut flat = Vec::new();
        for _ in 0..9 {
            flat.extend(["<BEG>", "el", "<MID>", "la", "<END>"]);
        }
        let ys = parse(&flat).unwrap();
        let a = AlignmentMap::new((0..9).collect());
        assert_eq!(enumerate_alternatives(&ys, &a), Err(DeriveError::TooManyEntities { count: 9 }));
    }

    #[test]
    fn agreement_detects_inconsistency() {
        let (ys, a) = secretary_boss();
        let ok = PlainTranslation::from_text("El secretario estaba enojado con el jefe").unwrap();
        assert_eq!(
            check_agreement(&ys, &a, &ok),
            Agreement::Consistent(GenderAssignment::uniform([0, 1], Gender::Masculine))
        );
        let bad = PlainTranslation::from_text("El secretario estaba enojada con el jefe").unwrap();
        assert_eq!(check_agreement(&ys, &a, &bad), Agreement::Inconsistent);
        let edited = PlainTranslation::from_text("El secretario está enojado con el jefe").unwrap();
        assert_eq!(check_agreement(&ys, &a, &edited), Agreement::Inconsistent);
    }

    #[test]
    fn agreement_backtracks_over_prefix_sides() {
        // masculine side is a prefix of the feminine side
        let ys = parse(&["<BEG>", "a", "<MID>", "a", "b", "<END>", "b"]).unwrap();
        let a = AlignmentMap::new(vec![0]);
        let cand = PlainTranslation::from_text("a b").unwrap();
        assert_eq!(
            check_agreement(&ys, &a, &cand),
            Agreement::Consistent(GenderAssignment::new().with(0, Gender::Masculine))
        );
        let cand = PlainTranslation::from_text("a b b").unwrap();
        assert_eq!(
            check_agreement(&ys, &a, &cand),
            Agreement::Consistent(GenderAssignment::new().with(0, Gender::Feminine))
        );
    }
}
