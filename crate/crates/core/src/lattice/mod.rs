//! Constrained search over the gender-inflection variants of a translation.
//!
//! [`build_lattice`] marks every lexicon phrase in a base translation as a
//! site with its inflection variants. [`beam_decode`] finds the best path
//! through those sites under a [`SequenceScorer`], so decoded outputs differ
//! from the base only in gendered forms.

mod ngram;
mod scorer;

use std::cmp::Ordering;

pub use ngram::{NgramError, NgramModel, NgramScorer, BOS, EOS};
pub use scorer::{requested_gender, SequenceScorer, TagFollowingScorer};

use crate::derive::{enumerate_alternatives, AlignmentMap, DeriveError};
use crate::lexicon::InflectionLexicon;
use crate::structure::{Gender, PlainTranslation, Segment, StructuredTranslation};

/// A span of the base translation with its alternative phrasings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub start: usize,
    pub end: usize,
    /// Distinct variants in lexicographic order; one of them is the base phrase.
    pub variants: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InflectionLattice {
    base: PlainTranslation,
    sites: Vec<Site>,
}

impl InflectionLattice {
    pub fn base(&self) -> &PlainTranslation {
        &self.base
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Number of paths, saturating at `usize::MAX`.
    pub fn path_count(&self) -> usize {
        self.sites.iter().fold(1usize, |acc, s| acc.saturating_mul(s.variants.len()))
    }

    /// Surface of the path picking `choices[i]` at site `i`.
    pub fn realize(&self, choices: &[usize]) -> PlainTranslation {
        assert_eq!(choices.len(), self.sites.len(), "one choice per site");
        let mut tokens = Vec::with_capacity(self.base.len());
        let mut pos = 0;
        for (site, &c) in self.sites.iter().zip(choices) {
            tokens.extend_from_slice(&self.base.tokens[pos..site.start]);
            tokens.extend_from_slice(&site.variants[c]);
            pos = site.end;
        }
        tokens.extend_from_slice(&self.base.tokens[pos..]);
        PlainTranslation { tokens }
    }

    /// Every path as a choice vector, in lexicographic order.
    pub fn paths(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.path_count();
        (0..total).map(move |mut code| {
            let mut choices = vec![0; self.sites.len()];
            for (i, site) in self.sites.iter().enumerate().rev() {
                choices[i] = code % site.variants.len();
                code /= site.variants.len();
            }
            choices
        })
    }

    /// True when `candidate` is the surface of some path.
    pub fn contains(&self, candidate: &PlainTranslation) -> bool {
        self.paths().any(|c| &self.realize(&c) == candidate)
    }
}

fn match_case(template: &str, phrase: &[String]) -> Vec<String> {
    let mut out = phrase.to_vec();
    let upper = template.chars().next().is_some_and(char::is_uppercase);
    if let Some(first) = out.first_mut() {
        let mut chars = first.chars();
        if let Some(c) = chars.next() {
            let rest: String = chars.collect();
            *first = if upper {
                c.to_uppercase().collect::<String>() + &rest
            } else {
                c.to_lowercase().collect::<String>() + &rest
            };
        }
    }
    out
}

/// Builds the inflection lattice of `base`.
///
/// Scanning left to right, the longest lexicon phrase (either side) starting
/// at each position becomes a site; shorter overlapping matches are subsumed.
/// Counterparts take the capitalization of the matched phrase's first letter.
pub fn build_lattice(base: &PlainTranslation, lexicon: &InflectionLexicon) -> InflectionLattice {
    let tokens = &base.tokens;
    let mut sites = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = (1..=lexicon.max_phrase_len().min(tokens.len() - i)).rev().find_map(|len| {
            let phrase = &tokens[i..i + len];
            let counterparts = lexicon.counterparts(phrase);
            (!counterparts.is_empty()).then_some((len, phrase, counterparts))
        });
        match longest {
            Some((len, phrase, counterparts)) => {
                let mut variants = vec![phrase.to_vec()];
                variants.extend(counterparts.iter().map(|cp| match_case(&phrase[0], &cp.phrase)));
                variants.sort();
                variants.dedup();
                if variants.len() >= 2 && !variants.iter().all(|v| articles_only(v)) {
                    sites.push(Site { start: i, end: i + len, variants });
                }
                i += len;
            }
            None => i += 1,
        }
    }
    InflectionLattice { base: base.clone(), sites }
}

/// Articles and article contractions. A site made only of these would flip
/// the article of any noun, person or not ("el informe" -> "la informe");
/// articles of person nouns are matched together with the noun instead.
const ARTICLES: &[&str] = &["el", "la", "los", "las", "un", "una", "unos", "unas", "del", "al", "de", "a"];

fn articles_only(phrase: &[String]) -> bool {
    phrase.iter().all(|t| ARTICLES.contains(&t.to_lowercase().as_str()))
}

/// A decoded path and its total score.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub translation: PlainTranslation,
    pub choices: Vec<usize>,
    pub score: f64,
}

#[derive(Debug, Clone)]
struct Hyp {
    tokens: Vec<String>,
    choices: Vec<usize>,
    score: f64,
}

// Higher score first; equal scores fall back to the smaller choice vector.
fn rank(a: &Hyp, b: &Hyp) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.choices.cmp(&b.choices))
}

fn extend<S: SequenceScorer + ?Sized>(hyp: &mut Hyp, scorer: &S, tokens: &[String]) {
    for tok in tokens {
        hyp.score += scorer.score(&hyp.tokens, tok);
        hyp.tokens.push(tok.clone());
    }
}

/// Plain left-to-right beam search keeping `width` hypotheses after each site.
pub fn beam_search<S: SequenceScorer + ?Sized>(lat: &InflectionLattice, scorer: &S, width: usize) -> Decoded {
    let width = width.max(1);
    let base = &lat.base.tokens;
    let mut beam = vec![Hyp { tokens: Vec::new(), choices: Vec::new(), score: 0.0 }];
    let mut pos = 0;
    for site in &lat.sites {
        for hyp in &mut beam {
            extend(hyp, scorer, &base[pos..site.start]);
        }
        let mut next = Vec::with_capacity(beam.len() * site.variants.len());
        for hyp in &beam {
            for (c, variant) in site.variants.iter().enumerate() {
                let mut h = hyp.clone();
                h.choices.push(c);
                extend(&mut h, scorer, variant);
                next.push(h);
            }
        }
        next.sort_by(rank);
        next.truncate(width);
        beam = next;
        pos = site.end;
    }
    for hyp in &mut beam {
        extend(hyp, scorer, &base[pos..]);
    }
    let best = beam.into_iter().min_by(rank).expect("beam is never empty");
    Decoded { translation: PlainTranslation { tokens: best.tokens }, choices: best.choices, score: best.score }
}

/// Best path through the lattice found with beams of up to `beam` hypotheses.
///
/// Plain beam search is not monotone in its width, so the result is the best
/// over all widths `1..=beam`: widening never lowers the score, and a beam at
/// least as wide as the path count is exhaustive.
pub fn beam_decode<S: SequenceScorer + ?Sized>(lat: &InflectionLattice, scorer: &S, beam: usize) -> Decoded {
    let widest = beam.max(1).min(lat.path_count());
    (1..=widest)
        .map(|w| beam_search(lat, scorer, w))
        .reduce(|best, cand| {
            let better = cand.score > best.score || (cand.score == best.score && cand.choices < best.choices);
            if better {
                cand
            } else {
                best
            }
        })
        .expect("at least one width")
}

/// All-masculine and all-feminine variants of `base`, decoded over the same lattice.
pub fn make_variants<M, F>(
    base: &PlainTranslation,
    lexicon: &InflectionLexicon,
    scorer_masculine: &M,
    scorer_feminine: &F,
    beam: usize,
) -> (PlainTranslation, PlainTranslation)
where
    M: SequenceScorer + ?Sized,
    F: SequenceScorer + ?Sized,
{
    let lat = build_lattice(base, lexicon);
    (beam_decode(&lat, scorer_masculine, beam).translation, beam_decode(&lat, scorer_feminine, beam).translation)
}

fn average<S: SequenceScorer + ?Sized>(scorer: &S, prefix: &[String], tokens: &[String]) -> f64 {
    scorer.score_span(prefix, tokens) / tokens.len() as f64
}

/// Removes structures by keeping, per structure, the side with the higher
/// average token log-probability. Ties keep the masculine side.
///
/// Each structure is decided on its own, so two structures governed by the
/// same entity may end up with different genders; see [`collapse_consistent`].
pub fn collapse<S: SequenceScorer + ?Sized>(ys: &StructuredTranslation, scorer: &S) -> PlainTranslation {
    let mut tokens: Vec<String> = Vec::new();
    for seg in ys.segments() {
        match seg {
            Segment::Token(t) => tokens.push(t.clone()),
            Segment::Structure(s) => {
                let masc = average(scorer, &tokens, s.masculine());
                let fem = average(scorer, &tokens, s.feminine());
                let side = if fem > masc { Gender::Feminine } else { Gender::Masculine };
                tokens.extend_from_slice(s.side(side));
            }
        }
    }
    PlainTranslation { tokens }
}

/// Entity-consistent collapse: among all alternatives of `(ys, alignment)`,
/// keeps the one with the highest summed per-structure average
/// log-probability. Ties keep the earlier alternative in enumeration order.
pub fn collapse_consistent<S: SequenceScorer + ?Sized>(
    ys: &StructuredTranslation,
    alignment: &AlignmentMap,
    scorer: &S,
) -> Result<PlainTranslation, DeriveError> {
    let mut best: Option<(f64, PlainTranslation)> = None;
    for (assignment, _) in enumerate_alternatives(ys, alignment)? {
        let mut tokens: Vec<String> = Vec::new();
        let mut total = 0.0;
        let mut k = 0;
        for seg in ys.segments() {
            match seg {
                Segment::Token(t) => tokens.push(t.clone()),
                Segment::Structure(s) => {
                    let side = s.side(assignment.get(alignment.by_structure[k]).expect("enumerated"));
                    total += average(scorer, &tokens, side);
                    tokens.extend_from_slice(side);
                    k += 1;
                }
            }
        }
        if best.as_ref().is_none_or(|(score, _)| total > *score) {
            best = Some((total, PlainTranslation { tokens }));
        }
    }
    Ok(best.expect("at least one alternative").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse;

    fn plain(s: &str) -> PlainTranslation {
        PlainTranslation::from_text(s).unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn bare_articles_are_not_sites() {
        let lex = crate::lexicon::spanish_lexicon();
        let lat = build_lattice(&plain("El enfermero dijo que el informe estaba listo"), &lex);
        assert_eq!(lat.sites.len(), 1);
        assert_eq!(lat.sites[0].variants, vec![toks("El enfermero"), toks("La enfermera")]);
        // epicene nouns keep their article site through the multiword entry
        let lat = build_lattice(&plain("con el paciente"), &lex);
        assert_eq!(lat.sites[0].variants, vec![toks("el paciente"), toks("la paciente")]);
    }

    #[test]
    fn two_sites_four_paths() {
        let lex = InflectionLexicon::from_pairs([("el doctor", "la doctora"), ("enojado", "enojada")]).unwrap();
        let lat = build_lattice(&plain("El doctor estaba enojado"), &lex);
        assert_eq!(lat.sites().len(), 2);
        assert!(lat.sites().iter().all(|s| s.variants.len() == 2));
        assert_eq!(lat.path_count(), 4);
        assert_eq!(lat.sites()[0].variants, vec![toks("El doctor"), toks("La doctora")]);
        let surfaces: std::collections::HashSet<_> = lat.paths().map(|c| lat.realize(&c).text()).collect();
        assert_eq!(surfaces.len(), 4);
    }

    #[test]
    fn no_matches_no_sites() {
        let lat = build_lattice(&plain("Hola mundo"), &InflectionLexicon::from_pairs([("el", "la")]).unwrap());
        assert!(lat.sites().is_empty());
        assert_eq!(lat.path_count(), 1);
        assert_eq!(lat.realize(&[]).text(), "Hola mundo");
    }

    #[test]
    fn longest_match_subsumes_shorter() {
        let lex = InflectionLexicon::from_pairs([("el", "la"), ("el paciente", "la paciente")]).unwrap();
        let lat = build_lattice(&plain("con el paciente"), &lex);
        assert_eq!(lat.sites().len(), 1);
        assert_eq!((lat.sites()[0].start, lat.sites()[0].end), (1, 3));
    }

    #[test]
    fn decode_prefers_scored_variant() {
        let lex = InflectionLexicon::from_pairs([("enojado", "enojada")]).unwrap();
        let lat = build_lattice(&plain("estaba enojado"), &lex);
        let prefer_fem = |_: &[String], t: &str| if t == "enojada" { -0.1 } else { -1.0 };
        assert_eq!(beam_decode(&lat, &prefer_fem, 1).translation.text(), "estaba enojada");
    }

    #[test]
    fn uniform_scorer_picks_first_variants() {
        let lex = InflectionLexicon::from_pairs([("el doctor", "la doctora"), ("enojado", "enojada")]).unwrap();
        let lat = build_lattice(&plain("La doctora estaba enojada"), &lex);
        let uniform = |_: &[String], _: &str| 0.0;
        let out = beam_decode(&lat, &uniform, 4);
        assert_eq!(out.choices, vec![0, 0]);
        // variants are in lexicographic order: "El doctor" < "La doctora", "enojada" < "enojado"
        assert_eq!(out.translation.text(), "El doctor estaba enojada");
    }

    #[test]
    fn make_variants_without_sites() {
        let lex = InflectionLexicon::from_pairs([("el", "la")]).unwrap();
        let base = plain("Hola mundo");
        let s = |_: &[String], _: &str| 0.0;
        assert_eq!(make_variants(&base, &lex, &s, &s, 4), (base.clone(), base));
    }

    #[test]
    fn collapse_picks_higher_average() {
        let ys = parse(&toks("<BEG> El doctor <MID> La doctora <END> estaba")).unwrap();
        let s = |_: &[String], t: &str| if ["El", "doctor"].contains(&t) { -1.0 } else { -2.0 };
        assert_eq!(collapse(&ys, &s).text(), "El doctor estaba");
        let tie = |_: &[String], _: &str| -1.0;
        assert_eq!(collapse(&ys, &tie).text(), "El doctor estaba");
        let plain_ys = parse(&toks("Hola mundo")).unwrap();
        assert_eq!(collapse(&plain_ys, &tie).text(), "Hola mundo");
    }

    #[test]
    fn consistent_collapse_keeps_agreement() {
        let ys = parse(&toks("<BEG> El secretario <MID> La secretaria <END> estaba <BEG> enojado <MID> enojada <END>"))
            .unwrap();
        let a = AlignmentMap::new(vec![0, 0]);
        // favours the masculine noun phrase but strongly the feminine adjective
        let s = |_: &[String], t: &str| match t {
            "El" | "secretario" => -1.0,
            "La" | "secretaria" => -1.5,
            "enojada" => -0.1,
            _ => -3.0,
        };
        assert_eq!(collapse(&ys, &s).text(), "El secretario estaba enojada");
        assert_eq!(collapse_consistent(&ys, &a, &s).unwrap().text(), "La secretaria estaba enojada");
    }
}
