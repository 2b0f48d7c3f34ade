//! Tiny manually differentiated networks, a bigram language model, and the
//! bundled synthetic datasets.

pub mod data;
mod lm;
mod mlp;

pub use lm::{BigramLM, LogPerplexity};
pub(crate) use mlp::argmax;
pub use mlp::{softmax, Activation, Batch, Loss, Target, Targets, TinyModel, MAX_PARAMS};

/// Log-perplexity of `s` in bits; see [`BigramLM::log_perplexity`].
pub fn lm_log_perplexity(lm: &BigramLM, s: &[usize]) -> crate::Result<LogPerplexity> {
    lm.log_perplexity(s)
}
