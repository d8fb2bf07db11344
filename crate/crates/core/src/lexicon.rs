//! Gender-inflection lexicon: pairs of masculine/feminine phrases.
//!
//! File format is TSV, one pair per line: masculine phrase, TAB, feminine
//! phrase, tokens separated by spaces. Blank lines and lines starting with
//! `#` are skipped. Matching is case-insensitive.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use thiserror::Error;

use crate::structure::{is_marker, Gender};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("lexicon line {line}: {reason}")]
    Invalid { line: usize, reason: String },
}

/// Counterpart of a lexicon phrase with the gender of the counterpart side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterpart {
    pub phrase: Vec<String>,
    pub gender: Gender,
}

#[derive(Debug, Clone, Default)]
pub struct InflectionLexicon {
    pairs: Vec<(Vec<String>, Vec<String>)>,
    keys: HashSet<(Vec<String>, Vec<String>)>,
    // lowercased phrase -> counterparts, in insertion order
    index: HashMap<Vec<String>, Vec<Counterpart>>,
    masculine_tokens: HashSet<String>,
    feminine_tokens: HashSet<String>,
    max_phrase_len: usize,
}

pub(crate) fn lower(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

fn phrase(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

impl InflectionLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut lex = Self::new();
        for (line, (m, f)) in pairs.into_iter().enumerate() {
            lex.insert(phrase(m.as_ref()), phrase(f.as_ref()))
                .map_err(|reason| LexiconError::Invalid { line: line + 1, reason })?;
        }
        Ok(lex)
    }

    pub fn parse_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (m, f) = raw
                .split_once('\t')
                .ok_or_else(|| LexiconError::Invalid { line, reason: "expected masculine<TAB>feminine".into() })?;
            if f.contains('\t') {
                return Err(LexiconError::Invalid { line, reason: "more than two columns".into() });
            }
            lex.insert(phrase(m), phrase(f)).map_err(|reason| LexiconError::Invalid { line, reason })?;
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        Self::parse_tsv(&text)
    }

    pub fn insert(&mut self, masculine: Vec<String>, feminine: Vec<String>) -> Result<(), String> {
        if masculine.is_empty() || feminine.is_empty() {
            return Err("empty phrase".into());
        }
        if masculine.iter().chain(&feminine).any(|t| is_marker(t)) {
            return Err("phrase contains a reserved marker token".into());
        }
        let key = (lower(&masculine), lower(&feminine));
        if key.0 == key.1 {
            return Err(format!("identical sides {:?}", masculine.join(" ")));
        }
        if !self.keys.insert(key.clone()) {
            return Ok(());
        }
        self.max_phrase_len = self.max_phrase_len.max(masculine.len()).max(feminine.len());
        self.masculine_tokens.extend(key.0.iter().cloned());
        self.feminine_tokens.extend(key.1.iter().cloned());
        self.index
            .entry(key.0.clone())
            .or_default()
            .push(Counterpart { phrase: feminine.clone(), gender: Gender::Feminine });
        self.index
            .entry(key.1.clone())
            .or_default()
            .push(Counterpart { phrase: masculine.clone(), gender: Gender::Masculine });
        self.pairs.push((masculine, feminine));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Vec<String>, Vec<String>)] {
        &self.pairs
    }

    /// True when `(masculine, feminine)` is a lexicon pair, ignoring case.
    pub fn contains(&self, masculine: &[String], feminine: &[String]) -> bool {
        self.keys.contains(&(lower(masculine), lower(feminine)))
    }

    /// Counterparts of a phrase appearing on either side of some pair.
    pub fn counterparts(&self, phrase: &[String]) -> &[Counterpart] {
        self.index.get(&lower(phrase)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_phrase_len
    }

    /// Which sides of the lexicon a (lowercased) token occurs on.
    pub fn token_sides(&self, token: &str) -> (bool, bool) {
        let t = token.to_lowercase();
        (self.masculine_tokens.contains(&t), self.feminine_tokens.contains(&t))
    }
}

/// The bundled English–Spanish inflection lexicon covering the toy corpus.
pub const LEXICON_ES: &str = include_str!("../data/lexicon_es.tsv");

pub fn spanish_lexicon() -> InflectionLexicon {
    InflectionLexicon::parse_tsv(LEXICON_ES).expect("bundled lexicon is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        phrase(s)
    }

    #[test]
    fn parse_and_lookup_case_insensitive() {
        let lex = InflectionLexicon::parse_tsv("el doctor\tla doctora\n# comment\n\nenojado\tenojada\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert!(lex.contains(&toks("El doctor"), &toks("La doctora")));
        assert!(!lex.contains(&toks("La doctora"), &toks("El doctor")));
        assert_eq!(lex.counterparts(&toks("enojada"))[0].phrase, toks("enojado"));
        assert_eq!(lex.max_phrase_len(), 2);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(
            InflectionLexicon::parse_tsv("ok\tbien\nnotab\n"),
            Err(LexiconError::Invalid { line: 2, .. })
        ));
        assert!(InflectionLexicon::parse_tsv("el\tEl\n").is_err());
        assert!(InflectionLexicon::parse_tsv("a\tb\tc\n").is_err());
        assert!(InflectionLexicon::parse_tsv(" \tla\n").is_err());
    }

    #[test]
    fn bundled_lexicon_loads() {
        let lex = spanish_lexicon();
        assert!(lex.contains(&toks("del juez"), &toks("de la jueza")));
    }
}
