//! Combining an all-masculine and an all-feminine translation into one
//! structured translation.
//!
//! The two sides are aligned with a token-level longest common subsequence.
//! Common tokens stay plain; every maximal run of differing tokens becomes a
//! gender structure, provided the lexicon knows it as an inflection pair.

use thiserror::Error;

use crate::lexicon::InflectionLexicon;
use crate::structure::{GenderStructure, PlainTranslation, Segment, StructuredTranslation};

/// One block of a two-sequence alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Common(Vec<String>),
    /// Tokens only in the first sequence, and tokens only in the second.
    Diff(Vec<String>, Vec<String>),
}

/// LCS table over suffixes: `table[i][j]` is the LCS length of `a[i..]` and `b[j..]`.
fn suffix_lcs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            table[i][j] = if a[i] == b[j] { table[i + 1][j + 1] + 1 } else { table[i + 1][j].max(table[i][j + 1]) };
        }
    }
    table
}

/// Aligns two token sequences into alternating common runs and diff spans.
///
/// Matches are taken as early as possible along an optimal path, so common
/// runs are leftmost. Consecutive non-matching tokens from either side are
/// collected into a single diff span.
pub fn lcs_align<S: AsRef<str>>(a: &[S], b: &[S]) -> Vec<Block> {
    let a: Vec<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = b.iter().map(AsRef::as_ref).collect();
    let table = suffix_lcs(&a, &b);

    let mut blocks = Vec::new();
    let mut common: Vec<String> = Vec::new();
    let mut left: Vec<String> = Vec::new();
    let mut right: Vec<String> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let matched = i < a.len() && j < b.len() && a[i] == b[j] && table[i][j] == table[i + 1][j + 1] + 1;
        if matched {
            if !left.is_empty() || !right.is_empty() {
                blocks.push(Block::Diff(std::mem::take(&mut left), std::mem::take(&mut right)));
            }
            common.push(a[i].to_owned());
            i += 1;
            j += 1;
            continue;
        }
        if !common.is_empty() {
            blocks.push(Block::Common(std::mem::take(&mut common)));
        }
        if j >= b.len() || (i < a.len() && table[i + 1][j] >= table[i][j + 1]) {
            left.push(a[i].to_owned());
            i += 1;
        } else {
            right.push(b[j].to_owned());
            j += 1;
        }
    }
    if !common.is_empty() {
        blocks.push(Block::Common(common));
    }
    if !left.is_empty() || !right.is_empty() {
        blocks.push(Block::Diff(left, right));
    }
    blocks
}

/// Length of the longest common subsequence.
pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    lcs_align(a, b)
        .iter()
        .map(|blk| match blk {
            Block::Common(c) => c.len(),
            Block::Diff(..) => 0,
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("differing span ({masculine:?} | {feminine:?}) is not a known gender inflection")]
    Ungroupable { masculine: Vec<String>, feminine: Vec<String> },
}

/// Groups `(y_M, y_F)` into a structured translation.
pub fn group(
    masculine: &PlainTranslation,
    feminine: &PlainTranslation,
    lexicon: &InflectionLexicon,
) -> Result<StructuredTranslation, GroupError> {
    let mut segments = Vec::new();
    for block in lcs_align(&masculine.tokens, &feminine.tokens) {
        match block {
            Block::Common(tokens) => segments.extend(tokens.into_iter().map(Segment::Token)),
            Block::Diff(m, f) => {
                if !lexicon.contains(&m, &f) {
                    return Err(GroupError::Ungroupable { masculine: m, feminine: f });
                }
                let structure = GenderStructure::new(m.clone(), f.clone())
                    .map_err(|_| GroupError::Ungroupable { masculine: m, feminine: f })?;
                segments.push(Segment::Structure(structure));
            }
        }
    }
    Ok(StructuredTranslation::new(segments).expect("segments come from marker-free inputs"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::split;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn plain(s: &str) -> PlainTranslation {
        PlainTranslation::from_text(s).unwrap()
    }

    fn doctor_patient_lexicon() -> InflectionLexicon {
        InflectionLexicon::from_pairs([("el doctor", "la doctora"), ("enojado", "enojada"), ("el", "la")]).unwrap()
    }

    #[test]
    fn identical_sequences_one_common_run() {
        assert_eq!(lcs_align(&toks("a b c"), &toks("a b c")), vec![Block::Common(toks("a b c"))]);
    }

    #[test]
    fn single_substitution() {
        assert_eq!(
            lcs_align(&toks("a x b"), &toks("a y b")),
            vec![Block::Common(toks("a")), Block::Diff(toks("x"), toks("y")), Block::Common(toks("b")),]
        );
    }

    #[test]
    fn multiword_spans_merge() {
        assert_eq!(
            lcs_align(&toks("a salvo del juez ."), &toks("a salvo de la jueza .")),
            vec![
                Block::Common(toks("a salvo")),
                Block::Diff(toks("del juez"), toks("de la jueza")),
                Block::Common(toks(".")),
            ]
        );
    }

    #[test]
    fn groups_doctor_patient() {
        let ys = group(
            &plain("El doctor estaba enojado con el paciente"),
            &plain("La doctora estaba enojada con la paciente"),
            &doctor_patient_lexicon(),
        )
        .unwrap();
        let structs: Vec<String> = ys.structures().map(|s| s.to_string()).collect();
        assert_eq!(structs, ["(El doctor | La doctora)", "(enojado | enojada)", "(el | la)"]);
        assert_eq!(ys.segments().len(), 6);
    }

    #[test]
    fn equal_inputs_have_no_structures() {
        let y = plain("Hola mundo");
        let ys = group(&y, &y, &InflectionLexicon::new()).unwrap();
        assert_eq!(ys.structure_count(), 0);
        assert_eq!(split(&ys).0, y);
    }

    #[test]
    fn non_gender_difference_is_ungroupable() {
        let err = group(&plain("fue al mercado"), &plain("fue al tienda"), &doctor_patient_lexicon()).unwrap_err();
        assert_eq!(err, GroupError::Ungroupable { masculine: toks("mercado"), feminine: toks("tienda") });
    }

    #[test]
    fn insertion_is_ungroupable() {
        assert!(group(&plain("a b"), &plain("a x b"), &doctor_patient_lexicon()).is_err());
    }

    #[test]
    fn lexicon_lookup_is_order_sensitive() {
        // feminine form on the masculine side
        assert!(group(&plain("la casa"), &plain("el casa"), &doctor_patient_lexicon()).is_err());
    }
}
