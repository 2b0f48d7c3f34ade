//! The five-round secure-aggregation protocol as explicit client and server
//! state machines over a simulated in-process transport.
//!
//! Rounds: key advertising, key sharing, masked-input collection,
//! consistency check and unmasking. Each client holds two Diffie-Hellman key
//! pairs. Pair `(sk1, pk1)` seeds the pairwise masks `P_ij`; pair
//! `(sk2, pk2)` keys the client-to-client share encryption and derives the
//! self-mask seed `b = H("self-mask" ‖ sk2) mod q`.
//!
//! Client `i` submits
//!
//! ```text
//! c_i = encode(w_i) + M2_i + Σ_{j∈U2, j>i} P_ij − Σ_{j∈U2, j<i} P_ij   (mod p)
//! ```
//!
//! so pairwise masks of surviving pairs cancel in the sum. For each survivor
//! the server reconstructs `b` and removes `M2`; for each client that dropped
//! after sharing keys it reconstructs `sk1` and removes the dangling `P`.
//!
//! Identity keys come from a simulated PKI ([`IdentityRegistry`]) and sign
//! the advert and the survivor list. Dropouts follow a declarative schedule.
//! No wall clock is involved.

mod client;
mod messages;
mod server;
mod session;
mod transcript;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::crypto::{hash_to_u64, prg_expand_with, DhParams, KeyPair, Shamir};
use crate::error::{Error, Result};
use crate::numeric::{FieldVector, FixedPointCodec, Rng};

pub use client::{client_step, ClientPhase, ClientState};
pub use messages::{
    advert_bytes, survivor_list_bytes, Advert, ClientId, EncryptedShares, Party, Payload,
    ProtocolMessage, Round, SignedList,
};
pub use server::{server_step, ServerState};
pub use session::{
    run_secagg, run_session, GroupChoice, SecAggConfig, SessionOutcome, SessionSpec,
};
pub use transcript::{replay_aggregate, RoundTranscript, TRANSCRIPT_SCHEMA_VERSION};

/// Parameters every party agrees on before the protocol starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Shamir threshold and minimum participant count.
    pub k: usize,
    pub dim: usize,
    pub codec: FixedPointCodec,
    pub group: DhParams,
    pub shamir: Shamir,
}

impl ProtocolParams {
    pub fn new(k: usize, dim: usize) -> Self {
        ProtocolParams {
            k,
            dim,
            codec: FixedPointCodec::default(),
            group: DhParams::safe_prime_64(),
            shamir: Shamir::default(),
        }
    }

    pub fn with_group(mut self, group: DhParams) -> Self {
        self.group = group;
        self
    }

    pub fn with_codec(mut self, codec: FixedPointCodec) -> Self {
        self.codec = codec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k must be >= 1"));
        }
        if self.dim == 0 {
            return Err(Error::param("dim must be >= 1"));
        }
        if self.group.max_secret() >= self.shamir.q {
            return Err(Error::param("secret keys must fit the sharing field"));
        }
        Ok(())
    }
}

/// A client that stops responding once `after` is complete.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dropout {
    pub client: ClientId,
    pub after: Round,
}

/// Simulated public-key infrastructure: identity signing keys by client id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRegistry {
    keys: BTreeMap<ClientId, IdentityEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct IdentityEntry {
    #[serde(with = "crate::serde_dec::biguint")]
    pk: BigUint,
}

impl IdentityRegistry {
    /// Registers fresh identity keys for `ids`; returns the registry and the
    /// matching secret keys.
    pub fn generate(
        ids: &[ClientId],
        group: &DhParams,
        rng: &Rng,
    ) -> Result<(IdentityRegistry, BTreeMap<ClientId, KeyPair>)> {
        let mut keys = BTreeMap::new();
        let mut secrets = BTreeMap::new();
        for &id in ids {
            let kp = KeyPair::generate(group, &mut rng.child(id))?;
            keys.insert(id, IdentityEntry { pk: kp.pk.clone() });
            secrets.insert(id, kp);
        }
        Ok((IdentityRegistry { keys }, secrets))
    }

    pub fn public_key(&self, id: ClientId) -> Option<&BigUint> {
        self.keys.get(&id).map(|e| &e.pk)
    }
}

/// Self-mask seed derived from a client's second secret key.
pub fn self_mask_seed(sk2: u64, shamir: &Shamir) -> u64 {
    hash_to_u64(&[b"fedmask/self-mask/v1", &sk2.to_be_bytes()], shamir.q)
}

/// `M2 = PRG(b)`.
pub fn self_mask(b: u64, dim: usize, codec: &FixedPointCodec) -> FieldVector {
    prg_expand_with(b"self-mask", &BigUint::from(b), dim, codec)
}

/// `P_ij = PRG(s_ij)` for the shared secret `s_ij = g^{sk1_i·sk1_j}`.
pub fn pair_mask(secret: &BigUint, dim: usize, codec: &FixedPointCodec) -> FieldVector {
    prg_expand_with(b"pair-mask", secret, dim, codec)
}

/// Whether client `me` adds (`true`) or subtracts the mask shared with `peer`.
pub fn adds_pair_mask(me: ClientId, peer: ClientId) -> bool {
    peer > me
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ParamVector;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn spec(inputs: Vec<ParamVector>, k: usize, dropouts: Vec<Dropout>) -> SessionSpec {
        let dim = inputs[0].dim();
        SessionSpec {
            params: ProtocolParams::new(k, dim),
            inputs: inputs
                .into_iter()
                .enumerate()
                .map(|(i, v)| (i as u64 + 1, v))
                .collect(),
            dropouts,
            seed: 17,
        }
    }

    fn field_sum_of(s: &SessionSpec, ids: &[ClientId]) -> FieldVector {
        let enc: Vec<FieldVector> = ids
            .iter()
            .map(|id| s.params.codec.encode_clipped(&s.inputs[id]).unwrap())
            .collect();
        FieldVector::sum(&enc).unwrap()
    }

    #[test]
    fn two_clients_sum() {
        let s = spec(vec![pv(&[1.0, 2.0]), pv(&[3.0, 4.0])], 2, vec![]);
        let t = run_session(&s).unwrap().transcript;
        assert!(!t.aborted);
        assert_eq!(t.decoded.unwrap().as_slice(), &[4.0, 6.0]);
    }

    #[test]
    fn drop_after_key_sharing_excludes_the_client() {
        let s = spec(
            vec![pv(&[1.0]), pv(&[10.0]), pv(&[100.0])],
            2,
            vec![Dropout {
                client: 2,
                after: Round::ShareKeys,
            }],
        );
        let t = run_session(&s).unwrap().transcript;
        assert_eq!(t.survivors.u3, vec![1, 3]);
        assert_eq!(t.aggregate.unwrap(), field_sum_of(&s, &[1, 3]));
    }

    #[test]
    fn drop_after_masked_input_keeps_the_contribution() {
        let mut rng = Rng::new(5);
        let inputs: Vec<_> = (0..5)
            .map(|_| ParamVector::random_uniform(8, -3.0, 3.0, &mut rng).unwrap())
            .collect();
        let s = spec(
            inputs,
            3,
            vec![
                Dropout {
                    client: 4,
                    after: Round::MaskedInput,
                },
                Dropout {
                    client: 2,
                    after: Round::ShareKeys,
                },
            ],
        );
        let t = run_session(&s).unwrap().transcript;
        assert_eq!(t.survivors.u3, vec![1, 3, 4, 5]);
        assert_eq!(t.survivors.u5, vec![1, 3, 5]);
        assert_eq!(
            t.aggregate.clone().unwrap(),
            field_sum_of(&s, &[1, 3, 4, 5])
        );
        assert_eq!(replay_aggregate(&t).unwrap(), t.aggregate);
    }

    #[test]
    fn honest_ten_clients_within_quantum() {
        let mut rng = Rng::new(6);
        let inputs: Vec<_> = (0..10)
            .map(|_| ParamVector::random_uniform(8, -5.0, 5.0, &mut rng).unwrap())
            .collect();
        let plain = crate::numeric::vec_sum(&inputs).unwrap();
        let s = spec(inputs, 6, vec![]);
        let t = run_session(&s).unwrap().transcript;
        assert!(t.decoded.unwrap().max_abs_diff(&plain).unwrap() <= 2f64.powi(-20));
    }

    #[test]
    fn self_masks_are_all_that_remain_without_dropouts() {
        let mut rng = Rng::new(7);
        let inputs: Vec<_> = (0..4)
            .map(|_| ParamVector::random_uniform(6, -1.0, 1.0, &mut rng).unwrap())
            .collect();
        let s = spec(inputs, 3, vec![]);
        let out = run_session(&s).unwrap();
        let mut total =
            FieldVector::zeros(6, s.params.codec.modulus, s.params.codec.frac_bits).unwrap();
        for m in &out.transcript.messages {
            if let Payload::MaskedInput { input } = &m.payload {
                total.add_assign(input).unwrap();
            }
        }
        for c in out.clients.values() {
            total
                .sub_assign(&self_mask(c.b, 6, &s.params.codec))
                .unwrap();
        }
        assert_eq!(total, field_sum_of(&s, &[1, 2, 3, 4]));
    }

    #[test]
    fn pairwise_masks_are_negations() {
        let s = spec(vec![pv(&[0.0]); 3], 2, vec![]);
        let out = run_session(&s).unwrap();
        let (a, b) = (&out.clients[&1], &out.clients[&3]);
        let pa = pair_mask(&a.pair_secrets[&3], 1, &s.params.codec);
        let pb = pair_mask(&b.pair_secrets[&1], 1, &s.params.codec);
        assert_eq!(pa, pb);
        assert!(adds_pair_mask(1, 3) && !adds_pair_mask(3, 1));
    }

    #[test]
    fn k_equals_n_with_a_dropout_aborts() {
        let s = spec(
            vec![pv(&[1.0]); 5],
            5,
            vec![Dropout {
                client: 3,
                after: Round::Advertise,
            }],
        );
        let t = run_session(&s).unwrap().transcript;
        assert!(t.aborted);
        assert_eq!(t.abort_reason.as_deref(), Some("below threshold"));
        assert_eq!(replay_aggregate(&t).unwrap(), None);
    }

    #[test]
    fn transcripts_are_deterministic_and_round_trip() {
        let cfg = SecAggConfig {
            n: 5,
            k: 3,
            dim: 4,
            dropouts: vec![Dropout {
                client: 2,
                after: Round::MaskedInput,
            }],
            seed: 99,
            ..SecAggConfig::default()
        };
        let a = run_secagg(&cfg).unwrap();
        let b = run_secagg(&cfg).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let back = RoundTranscript::from_jsonl(&a.to_jsonl()).unwrap();
        assert_eq!(back, a);
        assert_eq!(replay_aggregate(&back).unwrap(), a.aggregate);
        assert!(a
            .to_jsonl()
            .lines()
            .next()
            .unwrap()
            .contains("fedmask.secagg.transcript"));
    }

    #[test]
    fn config_errors_name_the_field() {
        let cfg = SecAggConfig {
            n: 3,
            k: 4,
            ..SecAggConfig::default()
        };
        match run_secagg(&cfg) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "k"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forged_advert_signature_aborts_the_client() {
        let params = ProtocolParams::new(2, 1);
        let group = params.group.clone();
        let (reg, ids) = IdentityRegistry::generate(&[1, 2], &group, &Rng::new(1)).unwrap();
        let mk = |id| {
            ClientState::new(
                id,
                &pv(&[0.5]),
                params.clone(),
                reg.clone(),
                ids[&id].clone(),
                Rng::new(id),
            )
            .unwrap()
        };
        let (mut c1, mut c2) = (mk(1), mk(2));
        let a1 = c1.step(&[]).unwrap();
        let a2 = c2.step(&[]).unwrap();
        let mut adverts: Vec<Advert> = a1
            .iter()
            .chain(&a2)
            .map(|m| match &m.payload {
                Payload::KeyAdvert { advert } => advert.clone(),
                _ => unreachable!(),
            })
            .collect();
        adverts[1].pk1 = adverts[0].pk1.clone();
        let msg = ProtocolMessage::new(
            Party::Server,
            Party::Client(1),
            Payload::KeyList { adverts },
        );
        assert!(c1.step(&[msg]).unwrap().is_empty());
        assert!(c1.is_aborted());
    }

    #[test]
    fn rfc_group_session() {
        let s = SessionSpec {
            params: ProtocolParams::new(2, 2).with_group(crate::crypto::DhParams::rfc3526_2048()),
            inputs: [
                (1, pv(&[1.0, -1.0])),
                (2, pv(&[0.5, 0.25])),
                (3, pv(&[2.0, 2.0])),
            ]
            .into(),
            dropouts: vec![Dropout {
                client: 3,
                after: Round::ShareKeys,
            }],
            seed: 3,
        };
        let t = run_session(&s).unwrap().transcript;
        assert_eq!(t.decoded.unwrap().as_slice(), &[1.5, -0.75]);
    }
}
