//! Corpus-level evaluation: alternatives and structure precision/recall,
//! alignment accuracy, masculine/feminine BLEU and their gap, and rewrite
//! precision/recall/F0.5.
//!
//! Ratios with a zero denominator are reported as `None`, never as 0, so a
//! report tells "nothing predicted" apart from "everything wrong".

mod bleu;

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{corpus_bleu, delta_bleu, BleuError, DeltaBleu, MAX_ORDER};

use crate::corpus::{EvalPair, GTransRecord};
use crate::structure::GenderStructure;

/// A count ratio that keeps its numerator and denominator for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: usize,
    pub denominator: usize,
}

impl Ratio {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        debug_assert!(numerator <= denominator);
        Self { numerator, denominator }
    }

    /// `None` when the denominator is zero.
    pub fn value(self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{:.2} ({}/{})", 100.0 * v, self.numerator, self.denominator),
            None => write!(f, "n/a (0/0)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: Ratio,
    pub recall: Ratio,
}

/// `true` iff the record's target contains at least one gender structure.
fn has_structures(rec: &GTransRecord) -> bool {
    rec.target.has_structures()
}

/// Precision and recall of *producing* structures at all, per sentence.
pub fn alternatives_pr(pairs: &[EvalPair]) -> PrecisionRecall {
    let (both, hyp, refs) = pairs
        .par_iter()
        .map(|p| {
            let r = has_structures(&p.reference);
            let h = has_structures(&p.hypothesis);
            (usize::from(r && h), usize::from(h), usize::from(r))
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    PrecisionRecall { precision: Ratio::new(both, hyp), recall: Ratio::new(both, refs) }
}

/// How hypothesis structures are matched to reference structures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureMatching {
    /// Equal `(masculine, feminine)` pairs anywhere in the sentence, counted
    /// with multiplicity.
    #[default]
    Multiset,
    /// Equal pairs at the same structure index.
    Positional,
}

/// Matched `(hypothesis index, reference index)` structure pairs.
///
/// Under multiset matching the `n`-th occurrence of a pair in the hypothesis
/// is matched with its `n`-th occurrence in the reference.
pub fn match_structures(
    hypothesis: &GTransRecord,
    reference: &GTransRecord,
    mode: StructureMatching,
) -> Vec<(usize, usize)> {
    let hyp: Vec<&GenderStructure> = hypothesis.target.structures().collect();
    let refs: Vec<&GenderStructure> = reference.target.structures().collect();
    match mode {
        StructureMatching::Positional => {
            hyp.iter().zip(&refs).enumerate().filter(|(_, (h, r))| h == r).map(|(i, _)| (i, i)).collect()
        }
        StructureMatching::Multiset => {
            let mut pending: HashMap<&GenderStructure, Vec<usize>> = HashMap::new();
            for (j, r) in refs.iter().enumerate().rev() {
                pending.entry(*r).or_default().push(j);
            }
            hyp.iter().enumerate().filter_map(|(i, h)| pending.get_mut(*h).and_then(Vec::pop).map(|j| (i, j))).collect()
        }
    }
}

/// Structure precision/recall over the pairs where both sides have structures.
pub fn structure_pr(pairs: &[EvalPair], mode: StructureMatching) -> PrecisionRecall {
    let (correct, predicted, total) = pairs
        .par_iter()
        .filter(|p| has_structures(&p.reference) && has_structures(&p.hypothesis))
        .map(|p| {
            (
                match_structures(&p.hypothesis, &p.reference, mode).len(),
                p.hypothesis.target.structure_count(),
                p.reference.target.structure_count(),
            )
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    PrecisionRecall { precision: Ratio::new(correct, predicted), recall: Ratio::new(correct, total) }
}

fn aligned_head(rec: &GTransRecord, structure: usize) -> Option<usize> {
    let entity = *rec.alignments.by_structure.get(structure)?;
    rec.source.entities.get(entity).map(|e| e.head_index)
}

/// Fraction of matched structures aligned to the same source entity.
///
/// Entities are compared by head-word position, so the two records may list
/// their entities in different orders.
pub fn alignment_accuracy(pairs: &[EvalPair], mode: StructureMatching) -> Ratio {
    let (correct, total) = pairs
        .par_iter()
        .filter(|p| has_structures(&p.reference) && has_structures(&p.hypothesis))
        .map(|p| {
            let matched = match_structures(&p.hypothesis, &p.reference, mode);
            let correct = matched
                .iter()
                .filter(|&&(h, r)| {
                    let hyp = aligned_head(&p.hypothesis, h);
                    hyp.is_some() && hyp == aligned_head(&p.reference, r)
                })
                .count();
            (correct, matched.len())
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ratio::new(correct, total)
}

// ---------------------------------------------------------------------------
// Rewrite evaluation

/// Outcome of one rewrite attempt against a reference rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteAttempt {
    pub attempted: bool,
    pub matches_reference: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewriteScores {
    pub precision: Ratio,
    pub recall: Ratio,
    pub f05: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("no rewrite examples")]
    Empty,
}

/// `(1 + b^2) P R / (b^2 P + R)`; zero when both are zero.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Precision over attempted rewrites, recall over all examples, and F0.5.
///
/// An example counts as correct only if a rewrite was attempted and it
/// matches the reference.
pub fn rewrite_pr_f05(attempts: &[RewriteAttempt]) -> Result<RewriteScores, RewriteError> {
    if attempts.is_empty() {
        return Err(RewriteError::Empty);
    }
    let attempted = attempts.iter().filter(|a| a.attempted).count();
    let correct = attempts.iter().filter(|a| a.attempted && a.matches_reference).count();
    let precision = Ratio::new(correct, attempted);
    let recall = Ratio::new(correct, attempts.len());
    let f05 = precision.value().zip(recall.value()).map(|(p, r)| f_beta(p, r, 0.5));
    Ok(RewriteScores { precision, recall, f05 })
}

// ---------------------------------------------------------------------------
// Report

/// Every corpus-level number for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pairs: usize,
    pub structure_matching: StructureMatching,
    pub alternatives_precision: Ratio,
    pub alternatives_recall: Ratio,
    pub structure_precision: Ratio,
    pub structure_recall: Ratio,
    pub alignment_accuracy: Ratio,
    pub bleu_masc: f64,
    pub bleu_fem: f64,
    pub delta_bleu: f64,
}

impl MetricsReport {
    pub fn compute(pairs: &[EvalPair], mode: StructureMatching) -> Result<Self, BleuError> {
        let alt = alternatives_pr(pairs);
        let st = structure_pr(pairs, mode);
        let bleu = delta_bleu(pairs)?;
        Ok(Self {
            pairs: pairs.len(),
            structure_matching: mode,
            alternatives_precision: alt.precision,
            alternatives_recall: alt.recall,
            structure_precision: st.precision,
            structure_recall: st.recall,
            alignment_accuracy: alignment_accuracy(pairs, mode),
            bleu_masc: bleu.masculine,
            bleu_fem: bleu.feminine,
            delta_bleu: bleu.delta,
        })
    }

    /// Human-readable table, one metric per row.
    pub fn table(&self) -> String {
        let rows: [(&str, String); 8] = [
            ("Alternatives P", self.alternatives_precision.to_string()),
            ("Alternatives R", self.alternatives_recall.to_string()),
            ("Structure P", self.structure_precision.to_string()),
            ("Structure R", self.structure_recall.to_string()),
            ("Alignment Acc", self.alignment_accuracy.to_string()),
            ("BLEU (masc)", format!("{:.2}", self.bleu_masc)),
            ("BLEU (fem)", format!("{:.2}", self.bleu_fem)),
            ("delta-BLEU", format!("{:.2}", self.delta_bleu)),
        ];
        let mut out = format!("{} pairs, {:?} structure matching\n", self.pairs, self.structure_matching);
        for (name, value) in rows {
            out.push_str(&format!("{name:<16}{value}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toy_corpus;
    use crate::derive::AlignmentMap;
    use crate::structure::{parse, StructuredTranslation};

    fn with_target(rec: &GTransRecord, tgt: &str, align: Vec<usize>) -> GTransRecord {
        let toks: Vec<String> = tgt.split_whitespace().map(str::to_owned).collect();
        let mut out = rec.clone();
        out.target = parse(&toks).unwrap();
        out.alignments = AlignmentMap::new(align);
        out
    }

    fn flat(rec: &GTransRecord) -> GTransRecord {
        let mut out = rec.clone();
        out.target = StructuredTranslation::from_plain(&crate::structure::split(&rec.target).0);
        out.alignments = AlignmentMap::default();
        out
    }

    #[test]
    fn ratio_none_on_empty() {
        assert_eq!(Ratio::new(0, 0).value(), None);
        assert_eq!(Ratio::new(3, 4).value(), Some(0.75));
    }

    #[test]
    fn alternatives_counts() {
        let rec = toy_corpus()[0].clone();
        let f = flat(&rec);
        let mk = |r: &GTransRecord, h: &GTransRecord| EvalPair::new(r.clone(), h.clone()).unwrap();
        let pairs = vec![mk(&rec, &rec), mk(&rec, &rec), mk(&rec, &rec), mk(&f, &rec), mk(&rec, &f), mk(&rec, &f)];
        let pr = alternatives_pr(&pairs);
        assert_eq!(pr.precision, Ratio::new(3, 4));
        assert_eq!(pr.recall, Ratio::new(3, 5));
        let never = alternatives_pr(&[mk(&rec, &f)]);
        assert_eq!(never.precision.value(), None);
        assert_eq!(never.recall.value(), Some(0.0));
    }

    #[test]
    fn structure_multiset_two_thirds() {
        let rec = toy_corpus()[1].clone();
        let reference = with_target(
            &rec,
            "<BEG> El doctor <MID> La doctora <END> estaba <BEG> enojado <MID> enojada <END> con <BEG> ese <MID> esa <END> paciente",
            vec![0, 0, 1],
        );
        let pairs = vec![EvalPair::new(reference, rec).unwrap()];
        let pr = structure_pr(&pairs, StructureMatching::Multiset);
        assert_eq!(pr.precision, Ratio::new(2, 3));
        assert_eq!(pr.recall, Ratio::new(2, 3));
        assert_eq!(structure_pr(&[], StructureMatching::Multiset).precision.value(), None);
    }

    #[test]
    fn positional_is_stricter() {
        let rec = toy_corpus()[0].clone();
        let shifted = with_target(
            &rec,
            "<BEG> enojado <MID> enojada <END> <BEG> El secretario <MID> La secretaria <END> con <BEG> el jefe <MID> la jefa <END> .",
            vec![0, 0, 1],
        );
        let pairs = vec![EvalPair::new(rec, shifted).unwrap()];
        assert_eq!(structure_pr(&pairs, StructureMatching::Multiset).precision, Ratio::new(3, 3));
        assert_eq!(structure_pr(&pairs, StructureMatching::Positional).precision, Ratio::new(1, 3));
    }

    #[test]
    fn misaligned_structure() {
        let rec = toy_corpus()[0].clone();
        let mut hyp = rec.clone();
        hyp.alignments = AlignmentMap::new(vec![0, 0, 0]);
        let pairs = vec![EvalPair::new(rec.clone(), hyp).unwrap()];
        assert_eq!(alignment_accuracy(&pairs, StructureMatching::Multiset), Ratio::new(2, 3));
        let same = vec![EvalPair::new(rec.clone(), rec.clone()).unwrap()];
        assert_eq!(alignment_accuracy(&same, StructureMatching::Multiset), Ratio::new(3, 3));
        let none = vec![EvalPair::new(rec.clone(), flat(&rec)).unwrap()];
        assert_eq!(alignment_accuracy(&none, StructureMatching::Multiset).value(), None);
    }

    #[test]
    fn entity_order_does_not_matter() {
        let rec = toy_corpus()[0].clone();
        let mut hyp = rec.clone();
        hyp.source.entities.reverse();
        hyp.alignments = AlignmentMap::new(vec![1, 1, 0]);
        let pairs = vec![EvalPair::new(rec, hyp).unwrap()];
        assert_eq!(alignment_accuracy(&pairs, StructureMatching::Multiset), Ratio::new(3, 3));
    }

    fn attempts(total: usize, attempted: usize, correct: usize) -> Vec<RewriteAttempt> {
        (0..total).map(|i| RewriteAttempt { attempted: i < attempted, matches_reference: i < correct }).collect()
    }

    #[test]
    fn rewrite_arithmetic() {
        let s = rewrite_pr_f05(&attempts(10, 8, 6)).unwrap();
        assert_eq!(s.precision.value(), Some(0.75));
        assert_eq!(s.recall.value(), Some(0.6));
        approx::assert_abs_diff_eq!(s.f05.unwrap(), 0.75 * 0.6 * 1.25 / (0.25 * 0.75 + 0.6), epsilon = 1e-12);
        let all = rewrite_pr_f05(&attempts(4, 4, 4)).unwrap();
        assert_eq!(all.f05, Some(1.0));
        let none = rewrite_pr_f05(&attempts(4, 0, 0)).unwrap();
        assert_eq!(none.precision.value(), None);
        assert_eq!(none.f05, None);
        assert_eq!(rewrite_pr_f05(&[]), Err(RewriteError::Empty));
    }

    #[test]
    fn report_on_identity() {
        let pairs: Vec<EvalPair> = toy_corpus().into_iter().map(|r| EvalPair::new(r.clone(), r).unwrap()).collect();
        let rep = MetricsReport::compute(&pairs, StructureMatching::Multiset).unwrap();
        assert_eq!(rep.structure_precision.value(), Some(1.0));
        assert_eq!(rep.alignment_accuracy.value(), Some(1.0));
        assert_eq!(rep.delta_bleu, 0.0);
        assert!(rep.table().contains("delta-BLEU"));
        let json = serde_json::to_string(&rep).unwrap();
        assert_eq!(serde_json::from_str::<MetricsReport>(&json).unwrap(), rep);
    }
}
