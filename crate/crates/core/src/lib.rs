//! Entity-level gendered translation alternatives.
//!
//! A [`StructuredTranslation`] embeds gender structures — paired masculine
//! and feminine phrases — in a translation, and an [`AlignmentMap`] says
//! which ambiguous source entity governs each structure. Every assignment of
//! genders to those entities then derives one grammatically consistent
//! plain translation.
//!
//! ```
//! use genderalt::{corpus::toy_corpus, derive, GenderAssignment, Gender};
//!
//! let rec = &toy_corpus()[0];
//! let g = GenderAssignment::new().with(0, Gender::Masculine).with(1, Gender::Feminine);
//! let out = derive(&rec.target, &rec.alignments, &g).unwrap();
//! assert_eq!(out.detokenized(), "El secretario estaba enojado con la jefa.");
//! ```
//!
//! Modules:
//! - [`structure`]: the representation, its `<BEG> m <MID> f <END>` serialization and [`split`]
//! - [`derive`](mod@derive): derivation, enumeration and the agreement check
//! - [`group`](mod@group): building a structured translation from masculine/feminine variants
//! - [`lattice`]: inflection lattices, beam decoding and structure collapse
//! - [`align`]: attention-based alignment, its loss, and a heuristic aligner
//! - [`bitext`]: gender-tagged fine-tuning data
//! - [`pipeline`]: detect → transform → group → align augmentation
//! - [`metrics`](mod@metrics): evaluation

pub mod align;
pub mod bitext;
pub mod corpus;
pub mod derive;
pub mod group;
pub mod lattice;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod structure;

pub use corpus::{AnnotatedSource, EntityAnnotation, EntityLabel, EvalPair, GTransRecord};
pub use derive::{check_agreement, derive, enumerate_alternatives, Agreement, AlignmentMap, GenderAssignment};
pub use group::group;
pub use lexicon::InflectionLexicon;
pub use structure::{
    parse, serialize, split, Gender, GenderStructure, PlainTranslation, Segment, StructuredTranslation,
};
