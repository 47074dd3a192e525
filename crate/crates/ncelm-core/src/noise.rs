//! Noise distributions over the vocabulary and O(1) categorical sampling.
//!
//! Three families are supported: uniform, a unigram distribution raised to
//! a power `alpha`, and a rank-based power law (Zipf) where word `i`'s
//! weight is `1 / rank_i^s` with ranks assigned by descending corpus
//! frequency. Sampling uses Vose's alias method, so drawing each noise word
//! costs one table lookup regardless of vocabulary size.

use crate::error::{Error, Result};
use crate::tensor::RngStream;

/// Which family of noise distribution to build from corpus counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    /// Every word equally likely.
    Uniform,
    /// `p_i` proportional to `count_i^alpha` (`alpha = 1` is the empirical
    /// unigram, `alpha = 0` is uniform).
    Unigram { alpha: f64 },
    /// `p_i` proportional to `1 / rank_i^s` where rank 1 is the most
    /// frequent word.
    Zipf { s: f64 },
}

/// A fixed categorical distribution over word ids with an alias table for
/// constant-time sampling and precomputed log-probabilities for the
/// contrastive objective.
#[derive(Clone, Debug)]
pub struct NoiseDistribution {
    kind: NoiseKind,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    alias_prob: Vec<f64>,
    alias_idx: Vec<usize>,
}

impl NoiseDistribution {
    /// Builds the distribution from per-word corpus counts (indexed by word
    /// id). Zero counts are floored to 1 so every word keeps nonzero noise
    /// probability — the contrastive posterior divides by it.
    pub fn build(kind: NoiseKind, counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("noise distribution over empty vocabulary".into()));
        }
        match kind {
            NoiseKind::Unigram { alpha } if !(alpha.is_finite() && alpha >= 0.0) => {
                return Err(Error::InvalidArgument(format!("unigram exponent must be >= 0, got {alpha}")));
            }
            NoiseKind::Zipf { s } if !(s.is_finite() && s >= 0.0) => {
                return Err(Error::InvalidArgument(format!("power-law exponent must be >= 0, got {s}")));
            }
            _ => {}
        }

        let n = counts.len();
        let weights: Vec<f64> = match kind {
            NoiseKind::Uniform => vec![1.0; n],
            NoiseKind::Unigram { alpha } => counts
                .iter()
                .map(|&c| (c.max(1) as f64).powf(alpha))
                .collect(),
            NoiseKind::Zipf { s } => {
                // Rank words by descending count, earliest id first on ties;
                // rank 1 gets the largest weight.
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
                let mut w = vec![0.0; n];
                for (pos, &id) in order.iter().enumerate() {
                    w[id] = 1.0 / ((pos + 1) as f64).powf(s);
                }
                w
            }
        };

        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::NonFinite(format!("noise weight normalizer {total}")));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let log_probs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        let (alias_prob, alias_idx) = build_alias(&probs);
        Ok(NoiseDistribution { kind, probs, log_probs, alias_prob, alias_idx })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: usize) -> f64 {
        self.probs[id]
    }

    pub fn log_prob(&self, id: usize) -> f64 {
        self.log_probs[id]
    }

    /// Draws one word id. Consumes exactly two RNG values (column pick and
    /// accept/alias coin), so sample streams are easy to reason about.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let j = rng.index(self.probs.len());
        if rng.next_f64() < self.alias_prob[j] {
            j
        } else {
            self.alias_idx[j]
        }
    }

    /// Draws `k` ids with replacement.
    pub fn sample_k(&self, k: usize, rng: &mut RngStream) -> Vec<usize> {
        (0..k).map(|_| self.sample(rng)).collect()
    }

    /// Draws `k` distinct ids by rejection; fails if `k` exceeds the
    /// vocabulary size.
    pub fn sample_k_unique(&self, k: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
        let n = self.probs.len();
        if k > n {
            return Err(Error::InvalidArgument(format!(
                "cannot draw {k} distinct words from a vocabulary of {n}"
            )));
        }
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let id = self.sample(rng);
            if !seen[id] {
                seen[id] = true;
                out.push(id);
            }
        }
        Ok(out)
    }
}

/// Vose's alias construction. Returns `(prob, alias)` tables such that
/// picking column `j` uniformly and accepting `j` with probability
/// `prob[j]` (else taking `alias[j]`) samples the input distribution
/// exactly.
fn build_alias(probs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = probs.len();
    let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let mut alias_prob = vec![1.0; n];
    let mut alias_idx: Vec<usize> = (0..n).collect();

    let mut small: Vec<usize> = Vec::with_capacity(n);
    let mut large: Vec<usize> = Vec::with_capacity(n);
    for (i, &s) in scaled.iter().enumerate() {
        if s < 1.0 {
            small.push(i)
        } else {
            large.push(i)
        }
    }

    while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
        alias_prob[s] = scaled[s];
        alias_idx[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if scaled[l] < 1.0 {
            small.push(l)
        } else {
            large.push(l)
        }
    }
    // Leftovers are numerically 1.0 columns; already initialized as such.
    (alias_prob, alias_idx)
}
