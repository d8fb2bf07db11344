//! Prompt construction for an external LLM used as the transformer.
//!
//! The editor preset asks the model to rewrite a given translation into the
//! requested gender; the generator preset asks it to translate the source
//! from scratch. Both show in-context exemplars first.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::GTransRecord;
use crate::structure::{split, Gender, PlainTranslation};

/// Exemplars taken from a corpus when none are given.
pub const DEFAULT_EXEMPLARS: usize = 6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptPreset {
    #[default]
    Editor,
    Generator,
}

/// A source with its all-masculine and all-feminine translations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub source: Vec<String>,
    pub masculine: PlainTranslation,
    pub feminine: PlainTranslation,
}

impl Exemplar {
    pub fn from_record(rec: &GTransRecord) -> Self {
        let (masculine, feminine) = split(&rec.target);
        Self { source: rec.source.tokens.clone(), masculine, feminine }
    }

    fn side(&self, gender: Gender) -> &PlainTranslation {
        match gender {
            Gender::Masculine => &self.masculine,
            Gender::Feminine => &self.feminine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditorAdapterConfig {
    /// URL or command line of the model service.
    pub endpoint: String,
    #[serde(default)]
    pub preset: PromptPreset,
    pub in_context_examples: Vec<Exemplar>,
}

impl EditorAdapterConfig {
    pub fn new(
        endpoint: impl Into<String>,
        preset: PromptPreset,
        in_context_examples: Vec<Exemplar>,
    ) -> Result<Self, String> {
        let cfg = Self { endpoint: endpoint.into(), preset, in_context_examples };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Uses the first [`DEFAULT_EXEMPLARS`] records that contain structures.
    pub fn from_corpus(
        endpoint: impl Into<String>,
        preset: PromptPreset,
        records: &[GTransRecord],
    ) -> Result<Self, String> {
        let exemplars = records
            .iter()
            .filter(|r| r.target.has_structures())
            .take(DEFAULT_EXEMPLARS)
            .map(Exemplar::from_record)
            .collect();
        Self::new(endpoint, preset, exemplars)
    }

    /// Samples `count` exemplars without replacement from the records that
    /// contain structures, keeping corpus order.
    pub fn sampled(
        endpoint: impl Into<String>,
        preset: PromptPreset,
        records: &[GTransRecord],
        count: usize,
        seed: u64,
    ) -> Result<Self, String> {
        let pool: Vec<&GTransRecord> = records.iter().filter(|r| r.target.has_structures()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, pool.len(), count.min(pool.len())).into_vec();
        picked.sort_unstable();
        Self::new(endpoint, preset, picked.into_iter().map(|i| Exemplar::from_record(pool[i])).collect())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.in_context_examples.is_empty() {
            return Err("prompt configuration needs at least one in-context example".into());
        }
        Ok(())
    }
}

fn gender_word(gender: Gender) -> &'static str {
    match gender {
        Gender::Masculine => "masculine",
        Gender::Feminine => "feminine",
    }
}

/// Deterministic prompt text: instruction, exemplars, then the query.
///
/// Editor exemplars rewrite the opposite-gender translation into the
/// requested one; generator exemplars and the generator query omit the
/// translation to be edited.
pub fn build_editor_prompt(
    cfg: &EditorAdapterConfig,
    source: &[String],
    base: &PlainTranslation,
    direction: Gender,
) -> String {
    let g = gender_word(direction);
    let mut out = String::new();
    match cfg.preset {
        PromptPreset::Editor => {
            out.push_str(&format!(
                "Edit the translation so that every person whose gender is unknown from the source \
                 is referred to with {g} forms. Change only words whose form depends on gender.\n"
            ));
            for ex in &cfg.in_context_examples {
                out.push_str(&format!(
                    "\nSource: {}\nTranslation: {}\nEdited: {}\n",
                    ex.source.join(" "),
                    ex.side(direction.flip()).text(),
                    ex.side(direction).text()
                ));
            }
            out.push_str(&format!("\nSource: {}\nTranslation: {}\nEdited:", source.join(" "), base.text()));
        }
        PromptPreset::Generator => {
            out.push_str(&format!(
                "Translate the source sentence, referring to every person whose gender is unknown \
                 from the source with {g} forms.\n"
            ));
            for ex in &cfg.in_context_examples {
                out.push_str(&format!(
                    "\nSource: {}\nTranslation: {}\n",
                    ex.source.join(" "),
                    ex.side(direction).text()
                ));
            }
            out.push_str(&format!("\nSource: {}\nTranslation:", source.join(" ")));
        }
    }
    out
}
