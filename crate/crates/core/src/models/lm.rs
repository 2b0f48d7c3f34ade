//! Bigram language model and log-perplexity.
//!
//! The model keeps an explicit `V × V` table of next-token probabilities, so
//! masked models can carry exact zeros. [`BigramLM::logits`] exposes the
//! natural-log view (`-∞` for zero entries); `softmax(logits)` recovers each
//! row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigramLM {
    v: usize,
    probs: Vec<f64>,
}

/// Log-perplexity of one sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPerplexity {
    /// Bits; `+∞` when a transition has probability zero.
    pub bits: f64,
    /// Set when some transition had probability zero.
    pub saturated: bool,
    /// Number of zero-probability transitions.
    pub zero_transitions: usize,
}

impl BigramLM {
    pub fn uniform(v: usize) -> Result<Self> {
        if v == 0 {
            return Err(Error::param("alphabet size must be >= 1"));
        }
        Ok(BigramLM {
            v,
            probs: vec![1.0 / v as f64; v * v],
        })
    }

    /// Builds a model from a row-major logit table (row softmax).
    pub fn from_logits(v: usize, logits: &[f64]) -> Result<Self> {
        if v == 0 || logits.len() != v * v {
            return Err(Error::param("logit table must be V×V with V >= 1"));
        }
        let mut probs = Vec::with_capacity(v * v);
        for row in logits.chunks(v) {
            probs.extend(crate::models::softmax(row));
        }
        Ok(BigramLM { v, probs })
    }

    /// Maximum-likelihood counts with additive smoothing.
    pub fn train(v: usize, corpus: &[Vec<usize>], smoothing: f64) -> Result<Self> {
        if v == 0 {
            return Err(Error::param("alphabet size must be >= 1"));
        }
        if smoothing < 0.0 {
            return Err(Error::param("smoothing must be >= 0"));
        }
        let mut counts = vec![smoothing; v * v];
        for seq in corpus {
            if let Some(&t) = seq.iter().find(|&&t| t >= v) {
                return Err(Error::param(format!("token {t} outside alphabet of {v}")));
            }
            for w in seq.windows(2) {
                counts[w[0] * v + w[1]] += 1.0;
            }
        }
        for row in counts.chunks_mut(v) {
            let s: f64 = row.iter().sum();
            if s == 0.0 {
                row.iter_mut().for_each(|p| *p = 1.0 / v as f64);
            } else {
                row.iter_mut().for_each(|p| *p /= s);
            }
        }
        Ok(BigramLM { v, probs: counts })
    }

    pub fn vocab(&self) -> usize {
        self.v
    }

    pub fn prob(&self, prev: usize, next: usize) -> f64 {
        self.probs[prev * self.v + next]
    }

    pub fn row(&self, prev: usize) -> &[f64] {
        &self.probs[prev * self.v..(prev + 1) * self.v]
    }

    /// Natural-log probabilities, `-∞` where a probability is zero.
    pub fn logits(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.ln()).collect()
    }

    /// Adds `U[-α, α]` to every probability, clamps at zero and renormalises
    /// each row. A row whose entries all clamp to zero keeps only its
    /// originally most likely successor.
    pub fn masked(&self, alpha: f64, rng: &mut Rng) -> Result<BigramLM> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if alpha == 0.0 {
            return Ok(self.clone());
        }
        let v = self.v;
        let mut probs = Vec::with_capacity(v * v);
        for r in 0..v {
            let orig = self.row(r);
            let mut row: Vec<f64> = orig
                .iter()
                .map(|&p| (p + rng.uniform(-alpha, alpha)).max(0.0))
                .collect();
            let s: f64 = row.iter().sum();
            if s == 0.0 {
                let best = crate::models::argmax(orig);
                row[best] = 1.0;
            } else {
                row.iter_mut().for_each(|p| *p /= s);
            }
            probs.extend(row);
        }
        Ok(BigramLM { v, probs })
    }

    /// `Σ −log2 Pr(x_i | x_{i−1})`; the first token is scored against a
    /// uniform prior.
    pub fn log_perplexity(&self, s: &[usize]) -> Result<LogPerplexity> {
        self.log_perplexity_from(None, s)
    }

    /// As [`BigramLM::log_perplexity`], but the first token is conditioned on
    /// `context` when given.
    pub fn log_perplexity_from(
        &self,
        context: Option<usize>,
        s: &[usize],
    ) -> Result<LogPerplexity> {
        if s.is_empty() {
            return Err(Error::param("sequence must contain at least one token"));
        }
        if let Some(&t) = s.iter().chain(context.iter()).find(|&&t| t >= self.v) {
            return Err(Error::param(format!(
                "token {t} outside alphabet of {}",
                self.v
            )));
        }
        let mut bits = 0.0;
        let mut zeros = 0;
        let mut prev = context;
        for &t in s {
            let p = match prev {
                None => 1.0 / self.v as f64,
                Some(q) => self.prob(q, t),
            };
            if p == 0.0 {
                zeros += 1;
            } else {
                bits -= p.log2();
            }
            prev = Some(t);
        }
        Ok(LogPerplexity {
            bits: if zeros > 0 { f64::INFINITY } else { bits },
            saturated: zeros > 0,
            zero_transitions: zeros,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::data::alternating_corpus;

    #[test]
    fn uniform_v4_three_tokens_is_six_bits() {
        let lm = BigramLM::uniform(4).unwrap();
        let lp = lm.log_perplexity(&[0, 3, 1]).unwrap();
        assert!((lp.bits - 6.0).abs() < 1e-12);
        assert!(!lp.saturated);
    }

    #[test]
    fn rows_sum_to_one() {
        let logits: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let lm = BigramLM::from_logits(3, &logits).unwrap();
        for r in 0..3 {
            assert!((lm.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn alternating_corpus_prefers_abab() {
        let lm = BigramLM::train(2, &[alternating_corpus(200)], 0.5).unwrap();
        let abab = lm.log_perplexity(&[0, 1, 0, 1]).unwrap().bits;
        let aaaa = lm.log_perplexity(&[0, 0, 0, 0]).unwrap().bits;
        assert!(abab < aaaa);
    }

    #[test]
    fn zero_transition_saturates() {
        let lm = BigramLM::train(2, &[alternating_corpus(10)], 0.0).unwrap();
        let lp = lm.log_perplexity(&[0, 0]).unwrap();
        assert!(lp.saturated && lp.bits.is_infinite());
    }

    #[test]
    fn additivity_with_boundary_context() {
        let mut rng = Rng::new(11);
        let logits: Vec<f64> = (0..25).map(|_| rng.normal(0.0, 1.0)).collect();
        let lm = BigramLM::from_logits(5, &logits).unwrap();
        let s1 = [0, 3, 2, 4];
        let s2 = [1, 1, 0];
        let joined: Vec<usize> = s1.iter().chain(&s2).copied().collect();
        let whole = lm.log_perplexity(&joined).unwrap().bits;
        let split = lm.log_perplexity(&s1).unwrap().bits
            + lm.log_perplexity_from(Some(4), &s2).unwrap().bits;
        assert!((whole - split).abs() < 1e-9);
    }

    #[test]
    fn masking_keeps_rows_normalised() {
        let lm = BigramLM::train(4, &[vec![0, 1, 2, 3, 0, 1]], 0.1).unwrap();
        let m = lm.masked(1.0, &mut Rng::new(2)).unwrap();
        for r in 0..4 {
            assert!((m.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(lm.masked(0.0, &mut Rng::new(2)).unwrap(), lm);
    }
}
