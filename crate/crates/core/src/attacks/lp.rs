use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::BigramLM;
use crate::numeric::Rng;

/// Bits charged per zero-probability transition in the capped mean.
pub const LP_CAP_BITS: f64 = 64.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub alpha: f64,
    /// Mean log-perplexity in bits; infinite once any sequence saturates.
    #[serde(with = "crate::serde_dec::f64_inf")]
    pub mean_lp: f64,
    /// Mean log-perplexity with each zero transition charged [`LP_CAP_BITS`].
    pub capped_mean_lp: f64,
    pub saturated: bool,
    pub saturated_sequences: usize,
}

/// Masks `lm` afresh for every alpha and averages log-perplexity over `corpus`.
pub fn lp_probe(
    lm: &BigramLM,
    alphas: &[f64],
    corpus: &[Vec<usize>],
    rng: &Rng,
) -> Result<Vec<LpRow>> {
    if corpus.is_empty() || corpus.iter().any(|s| s.is_empty()) {
        return Err(Error::param("corpus must hold non-empty sequences"));
    }
    alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let masked = if alpha == 0.0 {
                lm.clone()
            } else {
                lm.masked(alpha, &mut rng.child(i as u64))?
            };
            let mut sum = 0.0;
            let mut capped = 0.0;
            let mut sat = 0;
            for s in corpus {
                let lp = masked.log_perplexity(s)?;
                sum += lp.bits;
                if lp.saturated {
                    sat += 1;
                }
                capped += capped_bits(&masked, s);
            }
            let n = corpus.len() as f64;
            Ok(LpRow {
                alpha,
                mean_lp: sum / n,
                capped_mean_lp: capped / n,
                saturated: sat > 0,
                saturated_sequences: sat,
            })
        })
        .collect()
}

fn capped_bits(lm: &BigramLM, s: &[usize]) -> f64 {
    (lm.vocab() as f64).log2()
        + s.windows(2)
            .map(|w| {
                let p = lm.prob(w[0], w[1]);
                if p > 0.0 {
                    -p.log2()
                } else {
                    LP_CAP_BITS
                }
            })
            .sum::<f64>()
}
