use crate::lexicon::InflectionLexicon;
use crate::structure::Gender;

/// Scores a target token given the target prefix. The conditioning context
/// (the gender-tagged source) is fixed when the scorer is constructed.
///
/// Scores are log-probability contributions and must be deterministic.
pub trait SequenceScorer {
    fn score(&self, prefix: &[String], next: &str) -> f64;

    /// Sum of token scores of `tokens` continuing `prefix`.
    fn score_span(&self, prefix: &[String], tokens: &[String]) -> f64 {
        let mut ctx = prefix.to_vec();
        let mut total = 0.0;
        for tok in tokens {
            total += self.score(&ctx, tok);
            ctx.push(tok.clone());
        }
        total
    }
}

impl<F> SequenceScorer for F
where
    F: Fn(&[String], &str) -> f64,
{
    fn score(&self, prefix: &[String], next: &str) -> f64 {
        self(prefix, next)
    }
}

/// Gender requested by a tagged source: all `<M>` tags, all `<F>` tags, or neither.
pub fn requested_gender<S: AsRef<str>>(context: &[S]) -> Option<Gender> {
    let masc = context.iter().any(|t| t.as_ref() == crate::bitext::MASC_TAG);
    let fem = context.iter().any(|t| t.as_ref() == crate::bitext::FEM_TAG);
    match (masc, fem) {
        (true, false) => Some(Gender::Masculine),
        (false, true) => Some(Gender::Feminine),
        _ => None,
    }
}

/// Model-free scorer that follows the source's gender tags.
///
/// A token found only on the side of the lexicon opposite to the requested
/// gender costs `-1`; every other token scores `0`. With mixed or missing
/// tags all tokens score `0`.
#[derive(Debug, Clone)]
pub struct TagFollowingScorer<'a> {
    lexicon: &'a InflectionLexicon,
    gender: Option<Gender>,
}

impl<'a> TagFollowingScorer<'a> {
    pub fn new<S: AsRef<str>>(lexicon: &'a InflectionLexicon, context: &[S]) -> Self {
        Self { lexicon, gender: requested_gender(context) }
    }

    pub fn for_gender(lexicon: &'a InflectionLexicon, gender: Gender) -> Self {
        Self { lexicon, gender: Some(gender) }
    }
}

impl SequenceScorer for TagFollowingScorer<'_> {
    fn score(&self, _prefix: &[String], next: &str) -> f64 {
        let Some(gender) = self.gender else { return 0.0 };
        let (masc, fem) = self.lexicon.token_sides(next);
        let wrong_side_only = match gender {
            Gender::Masculine => fem && !masc,
            Gender::Feminine => masc && !fem,
        };
        if wrong_side_only {
            -1.0
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn follows_tags() {
        let lex = InflectionLexicon::from_pairs([("el doctor", "la doctora")]).unwrap();
        let fem = TagFollowingScorer::new(&lex, &["The", "doctor", "<F>"]);
        assert_eq!(fem.score(&[], "doctor"), -1.0);
        assert_eq!(fem.score(&[], "doctora"), 0.0);
        assert_eq!(fem.score(&[], "estaba"), 0.0);
        let mixed = TagFollowingScorer::new(&lex, &["a", "<F>", "b", "<M>"]);
        assert_eq!(mixed.score(&[], "doctor"), 0.0);
    }

    #[test]
    fn closures_are_scorers() {
        let s = |_: &[String], t: &str| -(t.len() as f64);
        assert_eq!(s.score_span(&[], &["ab".to_string(), "c".to_string()]), -3.0);
    }
}
