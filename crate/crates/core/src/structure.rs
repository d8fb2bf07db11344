//! Structured translations: plain tokens interleaved with gender structures.
//!
//! A gender structure pairs the masculine and feminine inflections of a
//! phrase. On the decoder side a structure is written as a flat token run
//! `<BEG> M… <MID> F… <END>`; [`serialize`] and [`parse`] convert between the
//! two forms.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opens a serialized gender structure.
pub const BEG: &str = "<BEG>";
/// Separates the masculine and feminine sides of a serialized structure.
pub const MID: &str = "<MID>";
/// Closes a serialized gender structure.
pub const END: &str = "<END>";

/// Returns true for the reserved structure marker tokens.
pub fn is_marker(token: &str) -> bool {
    token == BEG || token == MID || token == END
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("unbalanced markers: structure opened at token {open} is never closed")]
    UnbalancedMarkers { open: usize },
    #[error("nested markers: {BEG} at token {position} inside an open structure")]
    NestedMarkers { position: usize },
    #[error("empty {side} side in structure ending at token {position}")]
    EmptySide { side: &'static str, position: usize },
    #[error("stray marker {marker} at token {position} outside a structure")]
    StrayMarker { marker: String, position: usize },
    #[error("marker token {0:?} used as a plain token")]
    ReservedToken(String),
    #[error("gender structure has identical masculine and feminine sides {0:?}")]
    IdenticalSides(Vec<String>),
}

/// Grammatical gender of one side of a structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "M")]
    Masculine,
    #[serde(rename = "F")]
    Feminine,
}

impl Gender {
    pub fn flip(self) -> Self {
        match self {
            Gender::Masculine => Gender::Feminine,
            Gender::Feminine => Gender::Masculine,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Gender::Masculine => "M",
            Gender::Feminine => "F",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A marker-free token sequence: a translation without gender structures.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlainTranslation {
    pub tokens: Vec<String>,
}

impl PlainTranslation {
    pub fn new(tokens: Vec<String>) -> Result<Self, StructureError> {
        if let Some(tok) = tokens.iter().find(|t| is_marker(t)) {
            return Err(StructureError::ReservedToken(tok.clone()));
        }
        Ok(Self { tokens })
    }

    /// Splits on whitespace.
    pub fn from_text(text: &str) -> Result<Self, StructureError> {
        Self::new(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// Joins tokens, attaching closing punctuation to the preceding word and
    /// opening punctuation to the following one.
    pub fn detokenized(&self) -> String {
        let mut out = String::new();
        let mut glue_next = true;
        for tok in &self.tokens {
            let closing = matches!(tok.as_str(), "." | "," | ";" | ":" | "!" | "?" | ")" | "»");
            if !glue_next && !closing {
                out.push(' ');
            }
            out.push_str(tok);
            glue_next = matches!(tok.as_str(), "(" | "¿" | "¡" | "«");
        }
        out
    }
}

impl fmt::Display for PlainTranslation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// A pair of gender-inflected forms of the same phrase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenderStructure {
    #[serde(rename = "m")]
    masculine: Vec<String>,
    #[serde(rename = "f")]
    feminine: Vec<String>,
}

impl GenderStructure {
    pub fn new(masculine: Vec<String>, feminine: Vec<String>) -> Result<Self, StructureError> {
        if masculine.is_empty() {
            return Err(StructureError::EmptySide { side: "masculine", position: 0 });
        }
        if feminine.is_empty() {
            return Err(StructureError::EmptySide { side: "feminine", position: 0 });
        }
        if let Some(tok) = masculine.iter().chain(&feminine).find(|t| is_marker(t)) {
            return Err(StructureError::ReservedToken(tok.clone()));
        }
        if masculine == feminine {
            return Err(StructureError::IdenticalSides(masculine));
        }
        Ok(Self { masculine, feminine })
    }

    pub fn masculine(&self) -> &[String] {
        &self.masculine
    }

    pub fn feminine(&self) -> &[String] {
        &self.feminine
    }

    pub fn side(&self, gender: Gender) -> &[String] {
        match gender {
            Gender::Masculine => &self.masculine,
            Gender::Feminine => &self.feminine,
        }
    }

    /// The same structure with its sides exchanged.
    pub fn swapped(&self) -> Self {
        Self { masculine: self.feminine.clone(), feminine: self.masculine.clone() }
    }
}

impl fmt::Display for GenderStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} | {})", self.masculine.join(" "), self.feminine.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Segment {
    Token(String),
    Structure(GenderStructure),
}

/// A translation containing zero or more gender structures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct StructuredTranslation {
    segments: Vec<Segment>,
}

impl StructuredTranslation {
    pub fn new(segments: Vec<Segment>) -> Result<Self, StructureError> {
        for seg in &segments {
            match seg {
                Segment::Token(tok) if is_marker(tok) => return Err(StructureError::ReservedToken(tok.clone())),
                Segment::Token(_) => {}
                // re-run the structure checks; deserialized values bypass `GenderStructure::new`
                Segment::Structure(s) => {
                    GenderStructure::new(s.masculine.clone(), s.feminine.clone())?;
                }
            }
        }
        Ok(Self { segments })
    }

    pub fn from_plain(plain: &PlainTranslation) -> Self {
        Self { segments: plain.tokens.iter().cloned().map(Segment::Token).collect() }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn structures(&self) -> impl Iterator<Item = &GenderStructure> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Structure(g) => Some(g),
            Segment::Token(_) => None,
        })
    }

    /// Number of gender structures.
    pub fn structure_count(&self) -> usize {
        self.structures().count()
    }

    pub fn has_structures(&self) -> bool {
        self.structures().next().is_some()
    }

    /// Surface obtained by picking a side for each structure in order.
    pub fn realize(&self, mut choose: impl FnMut(usize, &GenderStructure) -> Gender) -> PlainTranslation {
        let mut tokens = Vec::new();
        let mut k = 0;
        for seg in &self.segments {
            match seg {
                Segment::Token(t) => tokens.push(t.clone()),
                Segment::Structure(s) => {
                    tokens.extend_from_slice(s.side(choose(k, s)));
                    k += 1;
                }
            }
        }
        PlainTranslation { tokens }
    }

    pub fn with_sides_swapped(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Structure(g) => Segment::Structure(g.swapped()),
                tok => tok.clone(),
            })
            .collect();
        Self { segments }
    }
}

impl<'de> Deserialize<'de> for StructuredTranslation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let segments = Vec::<Segment>::deserialize(de)?;
        Self::new(segments).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for StructuredTranslation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self).tokens.join(" "))
    }
}

/// Flat decoder-side token stream with the positions of its `<MID>` markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializedStructured {
    pub tokens: Vec<String>,
    pub mid_positions: Vec<usize>,
}

pub fn serialize(ys: &StructuredTranslation) -> SerializedStructured {
    let mut tokens = Vec::new();
    let mut mid_positions = Vec::new();
    for seg in &ys.segments {
        match seg {
            Segment::Token(t) => tokens.push(t.clone()),
            Segment::Structure(s) => {
                tokens.push(BEG.to_owned());
                tokens.extend_from_slice(&s.masculine);
                mid_positions.push(tokens.len());
                tokens.push(MID.to_owned());
                tokens.extend_from_slice(&s.feminine);
                tokens.push(END.to_owned());
            }
        }
    }
    SerializedStructured { tokens, mid_positions }
}

enum ParseState {
    Outside,
    Masculine { open: usize, masc: Vec<String> },
    Feminine { open: usize, masc: Vec<String>, fem: Vec<String> },
}

/// Parses a flat token stream back into a structured translation.
pub fn parse<S: AsRef<str>>(tokens: &[S]) -> Result<StructuredTranslation, StructureError> {
    let mut segments = Vec::new();
    let mut state = ParseState::Outside;
    for (pos, tok) in tokens.iter().map(AsRef::as_ref).enumerate() {
        state = match (state, tok) {
            (ParseState::Outside, BEG) => ParseState::Masculine { open: pos, masc: Vec::new() },
            (ParseState::Outside, MID | END) => {
                return Err(StructureError::StrayMarker { marker: tok.to_owned(), position: pos })
            }
            (ParseState::Outside, _) => {
                segments.push(Segment::Token(tok.to_owned()));
                ParseState::Outside
            }
            (ParseState::Masculine { .. } | ParseState::Feminine { .. }, BEG) => {
                return Err(StructureError::NestedMarkers { position: pos })
            }
            (ParseState::Masculine { masc, .. }, MID) if masc.is_empty() => {
                return Err(StructureError::EmptySide { side: "masculine", position: pos })
            }
            (ParseState::Masculine { open, masc }, MID) => ParseState::Feminine { open, masc, fem: Vec::new() },
            (ParseState::Masculine { .. }, END) => {
                return Err(StructureError::StrayMarker { marker: END.to_owned(), position: pos })
            }
            (ParseState::Masculine { open, mut masc }, _) => {
                masc.push(tok.to_owned());
                ParseState::Masculine { open, masc }
            }
            (ParseState::Feminine { .. }, MID) => {
                return Err(StructureError::StrayMarker { marker: MID.to_owned(), position: pos })
            }
            (ParseState::Feminine { fem, .. }, END) if fem.is_empty() => {
                return Err(StructureError::EmptySide { side: "feminine", position: pos })
            }
            (ParseState::Feminine { masc, fem, .. }, END) => {
                segments.push(Segment::Structure(GenderStructure::new(masc, fem)?));
                ParseState::Outside
            }
            (ParseState::Feminine { open, masc, mut fem }, _) => {
                fem.push(tok.to_owned());
                ParseState::Feminine { open, masc, fem }
            }
        };
    }
    match state {
        ParseState::Outside => Ok(StructuredTranslation { segments }),
        ParseState::Masculine { open, .. } | ParseState::Feminine { open, .. } => {
            Err(StructureError::UnbalancedMarkers { open })
        }
    }
}

/// The all-masculine and all-feminine surfaces of a structured translation.
pub fn split(ys: &StructuredTranslation) -> (PlainTranslation, PlainTranslation) {
    (ys.realize(|_, _| Gender::Masculine), ys.realize(|_, _| Gender::Feminine))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn doctor_patient() -> StructuredTranslation {
        StructuredTranslation::new(vec![
            Segment::Structure(GenderStructure::new(toks("El doctor"), toks("La doctora")).unwrap()),
            Segment::Token("estaba".into()),
            Segment::Structure(GenderStructure::new(toks("enojado"), toks("enojada")).unwrap()),
            Segment::Token("con".into()),
            Segment::Structure(GenderStructure::new(toks("el"), toks("la")).unwrap()),
            Segment::Token("paciente".into()),
        ])
        .unwrap()
    }

    #[test]
    fn serialize_single_structure() {
        let ys = StructuredTranslation::new(vec![Segment::Structure(
            GenderStructure::new(toks("El doctor"), toks("La doctora")).unwrap(),
        )])
        .unwrap();
        let ser = serialize(&ys);
        assert_eq!(ser.tokens, toks("<BEG> El doctor <MID> La doctora <END>"));
        assert_eq!(ser.mid_positions, vec![3]);
    }

    #[test]
    fn serialize_plain_is_identity() {
        let plain = PlainTranslation::from_text("Hola mundo").unwrap();
        let ser = serialize(&StructuredTranslation::from_plain(&plain));
        assert_eq!(ser.tokens, plain.tokens);
        assert!(ser.mid_positions.is_empty());
    }

    #[test]
    fn mid_positions_point_at_mid_tokens() {
        let ser = serialize(&doctor_patient());
        assert_eq!(ser.mid_positions.len(), 3);
        for &p in &ser.mid_positions {
            assert_eq!(ser.tokens[p], MID);
        }
        assert!(ser.mid_positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn parse_structure_then_plain() {
        let ys = parse(&toks("<BEG> El doctor <MID> La doctora <END> estaba")).unwrap();
        assert_eq!(ys.structure_count(), 1);
        assert_eq!(ys.segments().len(), 2);
        assert_eq!(ys.segments()[1], Segment::Token("estaba".into()));
    }

    #[test]
    fn parse_plain_token() {
        let ys = parse(&["Hola"]).unwrap();
        assert_eq!(ys.segments(), &[Segment::Token("Hola".into())]);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse(&toks("<BEG> x <MID> y")), Err(StructureError::UnbalancedMarkers { open: 0 }));
        assert_eq!(parse(&toks("<BEG> x <BEG> y <MID> z <END>")), Err(StructureError::NestedMarkers { position: 2 }));
        assert!(matches!(
            parse(&toks("<BEG> <MID> y <END>")),
            Err(StructureError::EmptySide { side: "masculine", .. })
        ));
        assert!(matches!(parse(&toks("<BEG> x <MID> <END>")), Err(StructureError::EmptySide { side: "feminine", .. })));
        assert!(matches!(parse(&toks("a <END>")), Err(StructureError::StrayMarker { .. })));
        assert!(matches!(parse(&toks("<MID> a")), Err(StructureError::StrayMarker { .. })));
    }

    #[test]
    fn parse_rejects_identical_sides() {
        assert!(matches!(parse(&toks("<BEG> el <MID> el <END>")), Err(StructureError::IdenticalSides(_))));
    }

    #[test]
    fn split_doctor_patient() {
        let (m, f) = split(&doctor_patient());
        assert_eq!(m.text(), "El doctor estaba enojado con el paciente");
        assert_eq!(f.text(), "La doctora estaba enojada con la paciente");
    }

    #[test]
    fn markers_rejected_as_plain_tokens() {
        assert!(PlainTranslation::from_text("a <MID> b").is_err());
        assert!(StructuredTranslation::new(vec![Segment::Token(END.into())]).is_err());
    }

    #[test]
    fn detokenize_attaches_punctuation() {
        let p = PlainTranslation::from_text("Hola , ¿ qué tal ?").unwrap();
        assert_eq!(p.detokenized(), "Hola, ¿qué tal?");
    }
}
