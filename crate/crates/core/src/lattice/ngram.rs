//! Add-k smoothed n-gram language model used as a reference scorer.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::SequenceScorer;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NgramError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("smoothing constant must be positive and finite, got {0}")]
    BadSmoothing(f64),
}

/// Counts of fixed-order n-grams over sentences padded with `<s>` and `</s>`.
///
/// The vocabulary is every training token plus `</s>`. Conditional
/// probabilities `(c(h, w) + k) / (c(h) + k |V|)` sum to one over it.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    k: f64,
    vocab: HashSet<String>,
    ngrams: HashMap<Vec<String>, usize>,
    histories: HashMap<Vec<String>, usize>,
}

impl NgramModel {
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], order: usize, k: f64) -> Result<Self, NgramError> {
        if order == 0 {
            return Err(NgramError::ZeroOrder);
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(NgramError::BadSmoothing(k));
        }
        if corpus.iter().all(|s| s.is_empty()) {
            return Err(NgramError::EmptyCorpus);
        }
        let mut vocab = HashSet::new();
        vocab.insert(EOS.to_owned());
        let mut ngrams = HashMap::new();
        let mut histories = HashMap::new();
        for sentence in corpus.iter().filter(|s| !s.is_empty()) {
            let mut padded: Vec<String> = vec![BOS.to_owned(); order - 1];
            padded.extend(sentence.iter().map(|t| t.as_ref().to_owned()));
            padded.push(EOS.to_owned());
            vocab.extend(sentence.iter().map(|t| t.as_ref().to_owned()));
            for window in padded.windows(order) {
                *ngrams.entry(window.to_vec()).or_insert(0) += 1;
                *histories.entry(window[..order - 1].to_vec()).or_insert(0) += 1;
            }
        }
        Ok(Self { order, k, vocab, ngrams, histories })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    /// `log P(next | history)`; only the last `order - 1` history tokens are used.
    pub fn log_prob<S: AsRef<str>>(&self, history: &[S], next: &str) -> f64 {
        let h = self.history_key(history);
        let ch = self.histories.get(&h).copied().unwrap_or(0) as f64;
        let mut gram = h;
        gram.push(next.to_owned());
        let chw = self.ngrams.get(&gram).copied().unwrap_or(0) as f64;
        ((chw + self.k) / (ch + self.k * self.vocab.len() as f64)).ln()
    }

    fn history_key<S: AsRef<str>>(&self, history: &[S]) -> Vec<String> {
        let need = self.order - 1;
        let have = history.len().min(need);
        let mut key: Vec<String> = vec![BOS.to_owned(); need - have];
        key.extend(history[history.len() - have..].iter().map(|t| t.as_ref().to_owned()));
        key
    }

    /// A scorer whose history starts with `context` followed by the target prefix.
    pub fn conditioned<S: AsRef<str>>(&self, context: &[S]) -> NgramScorer<'_> {
        NgramScorer { model: self, context: context.iter().map(|t| t.as_ref().to_owned()).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct NgramScorer<'a> {
    model: &'a NgramModel,
    context: Vec<String>,
}

impl SequenceScorer for NgramScorer<'_> {
    fn score(&self, prefix: &[String], next: &str) -> f64 {
        let need = self.model.order - 1;
        if prefix.len() >= need {
            return self.model.log_prob(prefix, next);
        }
        let mut history: Vec<&str> = self.context.iter().map(String::as_str).collect();
        history.extend(prefix.iter().map(String::as_str));
        self.model.log_prob(&history, next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| l.split_whitespace().map(str::to_owned).collect()).collect()
    }

    #[test]
    fn counts_drive_probabilities() {
        let m = NgramModel::train(&corpus(&["a b", "a b"]), 2, 0.1).unwrap();
        assert!(m.log_prob(&["a"], "b") > m.log_prob(&["a"], "a"));
    }

    #[test]
    fn unseen_token_is_finite() {
        let m = NgramModel::train(&corpus(&["a b"]), 3, 0.5).unwrap();
        assert!(m.log_prob(&["a", "b"], "zzz").is_finite());
    }

    #[test]
    fn normalizes_over_vocabulary() {
        let m = NgramModel::train(&corpus(&["a b c", "b c a a", "c"]), 2, 0.3).unwrap();
        let vocab: Vec<String> = m.vocab().map(str::to_owned).collect();
        let mut histories: Vec<Vec<String>> = vocab.iter().map(|w| vec![w.clone()]).collect();
        histories.push(vec![]);
        for h in &histories {
            let total: f64 = vocab.iter().map(|w| m.log_prob(h, w).exp()).sum();
            assert!((total - 1.0).abs() < 1e-9, "{h:?}: {total}");
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert_eq!(NgramModel::train::<String>(&[], 2, 1.0).unwrap_err(), NgramError::EmptyCorpus);
        assert_eq!(NgramModel::train(&corpus(&["a"]), 0, 1.0).unwrap_err(), NgramError::ZeroOrder);
        assert!(NgramModel::train(&corpus(&["a"]), 1, 0.0).is_err());
    }

    #[test]
    fn context_conditions_first_tokens() {
        let m = NgramModel::train(&corpus(&["x <F> la", "y <M> el"]), 2, 0.1).unwrap();
        let fem = m.conditioned(&["x", "<F>"]);
        let masc = m.conditioned(&["y", "<M>"]);
        assert!(fem.score(&[], "la") > fem.score(&[], "el"));
        assert!(masc.score(&[], "el") > masc.score(&[], "la"));
    }
}
