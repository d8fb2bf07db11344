//! Rule-based entity detector: head nouns from a word list, gender from
//! nearby gendered pronouns.

use std::collections::HashMap;
use std::path::Path;

use super::{Detector, PipelineError, SourceLabel};

/// The bundled English head-noun list.
pub const NOUNS_EN: &str = include_str!("../../data/nouns_en.txt");

/// Tokens searched on each side of a pronoun for the entity it refers to.
pub const DEFAULT_PRONOUN_WINDOW: usize = 5;

const MASCULINE_PRONOUNS: &[&str] = &["he", "him", "his", "himself"];
const FEMININE_PRONOUNS: &[&str] = &["she", "her", "hers", "herself"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NounClass {
    /// Role noun without lexical gender.
    Role,
    Masculine,
    Feminine,
    /// Masculine generic: an entity head that is never evidence of gender.
    Generic,
}

#[derive(Debug, Clone, Default)]
pub struct NounList {
    nouns: HashMap<String, NounClass>,
}

impl NounList {
    /// Parses `word<TAB>class` lines, class one of `A`, `M`, `F`, `G`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut nouns = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(word), Some(class), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(format!("noun list line {}: expected word<TAB>class", idx + 1));
            };
            let class = match class.trim() {
                "A" => NounClass::Role,
                "M" => NounClass::Masculine,
                "F" => NounClass::Feminine,
                "G" => NounClass::Generic,
                other => return Err(format!("noun list line {}: unknown class {other:?}", idx + 1)),
            };
            nouns.insert(word.trim().to_lowercase(), class);
        }
        Ok(Self { nouns })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn english() -> Self {
        Self::parse(NOUNS_EN).expect("bundled noun list is valid")
    }

    pub fn class(&self, word: &str) -> Option<NounClass> {
        self.nouns.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.nouns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nouns.is_empty()
    }
}

/// Deterministic stand-in for a trained source tagger.
///
/// Every listed noun is an entity head. Lexically gendered nouns keep their
/// gender. A gendered pronoun is attributed to the nearest role noun before
/// it within `window` tokens, or failing that the nearest one after it; a
/// head with pronoun evidence of one gender only is labelled with it, and
/// conflicting evidence leaves it ambiguous. Masculine generics stay
/// ambiguous.
#[derive(Debug, Clone)]
pub struct RuleDetector {
    pub nouns: NounList,
    pub window: usize,
}

impl RuleDetector {
    pub fn new(nouns: NounList, window: usize) -> Self {
        Self { nouns, window }
    }

    pub fn english() -> Self {
        Self::new(NounList::english(), DEFAULT_PRONOUN_WINDOW)
    }

    pub fn labels(&self, tokens: &[String]) -> Vec<SourceLabel> {
        let classes: Vec<Option<NounClass>> = tokens.iter().map(|t| self.nouns.class(t)).collect();
        let role = |i: usize| classes[i] == Some(NounClass::Role);
        let mut evidence: HashMap<usize, (bool, bool)> = HashMap::new();
        for (p, tok) in tokens.iter().enumerate() {
            let lower = tok.to_lowercase();
            let masc = MASCULINE_PRONOUNS.contains(&lower.as_str());
            let fem = FEMININE_PRONOUNS.contains(&lower.as_str());
            if !masc && !fem {
                continue;
            }
            let before = (p.saturating_sub(self.window)..p).rev().find(|&i| role(i));
            let after = || (p + 1..tokens.len().min(p + 1 + self.window)).find(|&i| role(i));
            if let Some(head) = before.or_else(after) {
                let e = evidence.entry(head).or_default();
                e.0 |= masc;
                e.1 |= fem;
            }
        }
        classes
            .iter()
            .enumerate()
            .map(|(i, class)| match class {
                None => SourceLabel::N,
                Some(NounClass::Masculine) => SourceLabel::M,
                Some(NounClass::Feminine) => SourceLabel::F,
                Some(NounClass::Generic) => SourceLabel::A,
                Some(NounClass::Role) => match evidence.get(&i) {
                    Some((true, false)) => SourceLabel::M,
                    Some((false, true)) => SourceLabel::F,
                    _ => SourceLabel::A,
                },
            })
            .collect()
    }
}

impl Detector for RuleDetector {
    fn annotate(&self, tokens: &[String]) -> Result<Vec<SourceLabel>, PipelineError> {
        Ok(self.labels(tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SourceLabel::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn doctor_patient_both_ambiguous() {
        let d = RuleDetector::english();
        assert_eq!(d.labels(&toks("The doctor was angry with the patient")), [N, A, N, N, N, N, A]);
    }

    #[test]
    fn lawyer_masculine() {
        let d = RuleDetector::english();
        let x = toks("The lawyer fought to keep his child , who is a gangster , safe from the judge .");
        let labels = d.labels(&x);
        assert_eq!(labels[1], M);
        assert_eq!(labels[6], A);
        assert_eq!(labels[16], A);
        assert_eq!(labels.iter().filter(|l| **l != N).count(), 3);
    }

    #[test]
    fn pronoun_before_its_noun() {
        let d = RuleDetector::english();
        assert_eq!(d.labels(&toks("She is a boss")), [N, N, N, F]);
    }

    #[test]
    fn window_limits_reach() {
        let d = RuleDetector::new(NounList::english(), 1);
        assert_eq!(d.labels(&toks("The lawyer fought to keep his child"))[1], A);
    }

    #[test]
    fn conflicting_evidence_stays_ambiguous() {
        let d = RuleDetector::english();
        assert_eq!(d.labels(&toks("the teacher said he and she left"))[1], A);
    }

    #[test]
    fn lexical_gender_and_generics() {
        let d = RuleDetector::english();
        assert_eq!(d.labels(&toks("The mother met the chairman")), [N, F, N, N, A]);
        // a pronoun next to a generic never makes it masculine
        assert_eq!(d.labels(&toks("the chairman said he")), [N, A, N, N]);
    }

    #[test]
    fn empty_sentence() {
        assert!(RuleDetector::english().labels(&[]).is_empty());
        assert!(NounList::parse("doctor\tX").is_err());
        assert!(NounList::parse("doctor").is_err());
    }
}
