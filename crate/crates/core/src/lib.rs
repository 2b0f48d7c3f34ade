//! `fedmask` is a deterministic federated-learning security workbench.
//!
//! It implements the five-round secure-aggregation protocol over a simulated
//! in-process transport, the malicious-server attacks that defeat it
//! (Sybil man-in-the-middle, secret-share compromise, strategic dropping, and
//! the two-party algebraic solve), and the alternative defense of masking each
//! client's local model with uniform noise `U[-α, α]` whose effect cancels
//! under averaging. Around that core sit desk-scale reconstruction attacks
//! (deep leakage from gradients, model inversion, a GAN attack, and a
//! log-perplexity probe), DP-SGD with a basic-composition ledger, and the
//! usual Byzantine-tolerant aggregators.
//!
//! Every random draw flows from a seeded [`numeric::Rng`], so identical seeds
//! reproduce identical transcripts, reports and traces.
//!
//! The cryptography here is simulation grade. Nothing is constant-time and
//! the groups, key sizes and ciphers are chosen for inspectability, not for
//! deployment.
//!
//! Module map:
//!
//! - [`numeric`]: parameter vectors, seeded streams, uniform masks, fixed-point field codec
//! - [`models`]: tiny manually differentiated MLPs, bigram language model, synthetic data
//! - [`crypto`]: modexp, Diffie-Hellman, Shamir, PRG expansion, Schnorr, RSA demo
//! - [`secagg`]: client/server state machines and the round driver
//! - [`adversary`]: malicious-server strategies against [`secagg`]
//! - [`fedcore`]: FedAvg, FedAvg with mask, DP-SGD (masked and plain), privacy ledger
//! - [`aggregators`]: Krum, geometric median, Bulyan, trimmed mean, median, centered clip
//! - [`attacks`]: DLG, model inversion, GAN attack, log-perplexity probe
//! - [`harness`]: scenario config, experiment orchestration, reports

pub mod adversary;
pub mod aggregators;
pub mod attacks;
pub mod crypto;
pub mod error;
pub mod fedcore;
pub mod harness;
pub mod models;
pub mod numeric;
pub mod secagg;
pub mod stats;

mod serde_dec;

pub use error::{Error, Result};
pub use numeric::{FieldVector, FixedPointCodec, ParamVector, Rng};
