use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::TextError;

/// Token/index map with counts and the `count^0.75` negative-sampling
/// distribution. Indices are ordered by descending count, then token.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    sampling: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Result<Vocab, TextError> {
    if corpus.iter().all(|d| d.is_empty()) {
        return Err(TextError::EmptyCorpus);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for tok in corpus.iter().flatten() {
        *counts.entry(tok.as_ref()).or_default() += 1;
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(TextError::EmptyVocab(min_count as usize));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(Vocab::from_counts(
        kept.into_iter().map(|(t, c)| (t.to_string(), c)).collect(),
    ))
}

impl Vocab {
    /// Builds a vocabulary from `(token, count)` pairs in index order.
    pub fn from_counts(entries: Vec<(String, u64)>) -> Vocab {
        let weights: Vec<f64> = entries.iter().map(|(_, c)| (*c as f64).powf(0.75)).collect();
        let total: f64 = weights.iter().sum();
        let sampling: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let sampler = WeightedIndex::new(&weights).expect("vocabulary weights are positive");
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        let (tokens, counts) = entries.into_iter().unzip();
        Vocab {
            tokens,
            counts,
            index,
            sampling,
            sampler,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    /// Negative-sampling probability of each index.
    pub fn sampling_probabilities(&self) -> &[f64] {
        &self.sampling
    }

    pub fn sample_negative<R: Rng>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }
}
