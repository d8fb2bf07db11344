//! Corpus BLEU over pre-tokenized text, without smoothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EvalPair;
use crate::structure::{split, PlainTranslation};

/// Highest n-gram order.
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BleuError {
    #[error("empty hypothesis corpus")]
    Empty,
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sufficient statistics of one or more sentence pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Stats {
    matches: [usize; MAX_ORDER],
    totals: [usize; MAX_ORDER],
    hyp_len: usize,
    ref_len: usize,
}

impl Stats {
    fn of(hyp: &[String], reference: &[String]) -> Self {
        let mut s = Stats { hyp_len: hyp.len(), ref_len: reference.len(), ..Default::default() };
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            s.totals[n - 1] = hyp.len().saturating_sub(n - 1);
            s.matches[n - 1] = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
        }
        s
    }

    fn add(mut self, other: &Stats) -> Self {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        self
    }

    fn score(&self) -> f64 {
        if self.matches.contains(&0) {
            return 0.0;
        }
        let log_precision: f64 =
            self.matches.iter().zip(&self.totals).map(|(&m, &t)| (m as f64 / t as f64).ln()).sum::<f64>()
                / MAX_ORDER as f64;
        let (c, r) = (self.hyp_len as f64, self.ref_len as f64);
        let log_bp = if c < r { 1.0 - r / c } else { 0.0 };
        100.0 * (log_precision + log_bp).exp()
    }
}

/// Corpus BLEU in `[0, 100]`: clipped 1–4-gram precisions pooled over the
/// corpus, geometric mean, brevity penalty `exp(1 - r/c)` when `c < r`.
/// Any zero precision gives 0.
pub fn corpus_bleu(hyps: &[PlainTranslation], refs: &[PlainTranslation]) -> Result<f64, BleuError> {
    if hyps.len() != refs.len() {
        return Err(BleuError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if hyps.is_empty() {
        return Err(BleuError::Empty);
    }
    let stats = hyps
        .iter()
        .zip(refs)
        .map(|(h, r)| Stats::of(&h.tokens, &r.tokens))
        .fold(Stats::default(), |acc, s| acc.add(&s));
    Ok(stats.score())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBleu {
    pub masculine: f64,
    pub feminine: f64,
    pub delta: f64,
}

/// BLEU of the masculine surfaces and of the feminine surfaces, and their
/// absolute difference. Structure-free sentences contribute the same text to
/// both sides.
pub fn delta_bleu(pairs: &[EvalPair]) -> Result<DeltaBleu, BleuError> {
    let mut hyp_m = Vec::with_capacity(pairs.len());
    let mut hyp_f = Vec::with_capacity(pairs.len());
    let mut ref_m = Vec::with_capacity(pairs.len());
    let mut ref_f = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (hm, hf) = split(&p.hypothesis.target);
        let (rm, rf) = split(&p.reference.target);
        hyp_m.push(hm);
        hyp_f.push(hf);
        ref_m.push(rm);
        ref_f.push(rf);
    }
    let masculine = corpus_bleu(&hyp_m, &ref_m)?;
    let feminine = corpus_bleu(&hyp_f, &ref_f)?;
    Ok(DeltaBleu { masculine, feminine, delta: (masculine - feminine).abs() })
}
