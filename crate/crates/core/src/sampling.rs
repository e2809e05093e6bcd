//! Smoothed language sampling and per-language validation carving.
//!
//! Languages are sampled with probability proportional to `count^alpha`.
//! With `alpha < 1` high-resource languages are down-sampled and low-resource
//! ones sampled more often; `alpha = 1` samples proportionally.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ALPHA: f64 = 0.7;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("no languages to sample from")]
    Empty,
    #[error("language {0:?} has a zero count")]
    ZeroCount(String),
    #[error("alpha must lie in (0, 1], got {0}")]
    Alpha(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LangWeights {
    pub counts: BTreeMap<String, u64>,
    pub alpha: f64,
    pub probs: BTreeMap<String, f64>,
    #[serde(skip)]
    sampler: Option<(Vec<String>, WeightedIndex<f64>)>,
}

impl PartialEq for LangWeights {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts && self.alpha == other.alpha && self.probs == other.probs
    }
}

pub fn compute_weights(counts: &BTreeMap<String, u64>, alpha: f64) -> Result<LangWeights, SampleError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SampleError::Alpha(alpha));
    }
    if counts.is_empty() {
        return Err(SampleError::Empty);
    }
    if let Some((lang, _)) = counts.iter().find(|(_, &c)| c == 0) {
        return Err(SampleError::ZeroCount(lang.clone()));
    }
    let smoothed: Vec<f64> = counts.values().map(|&c| (c as f64).powf(alpha)).collect();
    let total: f64 = smoothed.iter().sum();
    let probs: BTreeMap<String, f64> = counts.keys().cloned().zip(smoothed.iter().map(|s| s / total)).collect();
    let langs: Vec<String> = counts.keys().cloned().collect();
    let index = WeightedIndex::new(probs.values().copied()).expect("weights are positive and finite");
    Ok(LangWeights {
        counts: counts.clone(),
        alpha,
        probs,
        sampler: Some((langs, index)),
    })
}

impl LangWeights {
    /// One categorical draw.
    pub fn sample_language<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &str {
        if self.sampler.is_none() {
            let index = WeightedIndex::new(self.probs.values().copied()).expect("weights are positive and finite");
            self.sampler = Some((self.probs.keys().cloned().collect(), index));
        }
        let (langs, index) = self.sampler.as_ref().unwrap();
        &langs[index.sample(rng)]
    }

    /// `n` consecutive draws.
    pub fn schedule<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Vec<String> {
        (0..n).map(|_| self.sample_language(rng).to_owned()).collect()
    }
}

/// Per-language train/validation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: BTreeMap<String, Vec<T>>,
    pub valid: BTreeMap<String, Vec<T>>,
}

/// Moves `min(n, available)` instances of every language into the
/// validation set, chosen uniformly without replacement.
///
/// Languages are visited in sorted order; for each, a Fisher-Yates shuffle of
/// the positions `0..len` is run for `k` steps with one shared `rng`, and the
/// first `k` positions become validation. Both sides keep the input order.
pub fn carve_validation<T, R: Rng + ?Sized>(by_language: BTreeMap<String, Vec<T>>, n: usize, rng: &mut R) -> Split<T> {
    let mut train = BTreeMap::new();
    let mut valid = BTreeMap::new();
    for (lang, items) in by_language {
        let len = items.len();
        let k = n.min(len);
        let mut positions: Vec<usize> = (0..len).collect();
        for i in 0..k {
            let j = rng.random_range(i..len);
            positions.swap(i, j);
        }
        let mut chosen = vec![false; len];
        positions[..k].iter().for_each(|&p| chosen[p] = true);
        let (mut t, mut v) = (Vec::with_capacity(len - k), Vec::with_capacity(k));
        for (item, pick) in items.into_iter().zip(chosen) {
            if pick {
                v.push(item);
            } else {
                t.push(item);
            }
        }
        train.insert(lang.clone(), t);
        valid.insert(lang, v);
    }
    Split { train, valid }
}
