use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::crypto::{
    dh_shared_secret, hash_parts, prg_expand_with, sign, verify, KeyPair, ShamirShare,
};
use crate::error::{Error, Result};
use crate::numeric::{add_mod, sub_mod, FieldVector, FixedPointCodec, ParamVector, Rng};
use crate::secagg::messages::*;
use crate::secagg::{
    adds_pair_mask, pair_mask, self_mask, self_mask_seed, IdentityRegistry, ProtocolParams,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientPhase {
    Advertise,
    ShareKeys,
    MaskedInput,
    Consistency,
    Unmask,
    Done,
    Aborted(String),
}

/// Shares this client holds on behalf of one peer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeldShares {
    pub sk1: ShamirShare,
    pub b: ShamirShare,
}

/// One protocol participant. Sybil clients run this same state machine.
#[derive(Clone, Debug)]
pub struct ClientState {
    pub id: ClientId,
    pub phase: ClientPhase,
    params: ProtocolParams,
    registry: IdentityRegistry,
    identity: KeyPair,
    pub keys1: KeyPair,
    pub keys2: KeyPair,
    /// Self-mask seed `b`.
    pub b: u64,
    /// `encode(w)`.
    pub encoded_input: FieldVector,
    /// Public keys `(pk1, pk2)` of U1.
    pub peers: BTreeMap<ClientId, (BigUint, BigUint)>,
    pub u1: Vec<ClientId>,
    pub u2: Vec<ClientId>,
    pub u3: Vec<ClientId>,
    /// Shares received from each member of U2, including this client's own.
    pub held: BTreeMap<ClientId, HeldShares>,
    /// `s_ij` for every peer in U1.
    pub pair_secrets: BTreeMap<ClientId, BigUint>,
    rng: Rng,
}

impl ClientState {
    pub fn new(
        id: ClientId,
        input: &ParamVector,
        params: ProtocolParams,
        registry: IdentityRegistry,
        identity: KeyPair,
        rng: Rng,
    ) -> Result<Self> {
        if id == 0 {
            return Err(Error::param("client ids start at 1"));
        }
        if input.dim() != params.dim {
            return Err(Error::DimensionMismatch {
                expected: params.dim,
                actual: input.dim(),
            });
        }
        let mut rng = rng;
        let keys1 = KeyPair::generate(&params.group, &mut rng)?;
        let keys2 = KeyPair::generate(&params.group, &mut rng)?;
        let b = self_mask_seed(keys2.sk, &params.shamir);
        let encoded_input = params.codec.encode_clipped(input)?;
        Ok(ClientState {
            id,
            phase: ClientPhase::Advertise,
            params,
            registry,
            identity,
            keys1,
            keys2,
            b,
            encoded_input,
            peers: BTreeMap::new(),
            u1: Vec::new(),
            u2: Vec::new(),
            u3: Vec::new(),
            held: BTreeMap::new(),
            pair_secrets: BTreeMap::new(),
            rng,
        })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn is_aborted(&self) -> bool {
        matches!(self.phase, ClientPhase::Aborted(_))
    }

    fn abort(&mut self, reason: impl Into<String>) -> Vec<ProtocolMessage> {
        self.phase = ClientPhase::Aborted(reason.into());
        Vec::new()
    }

    fn to_server(&self, payload: Payload) -> Vec<ProtocolMessage> {
        vec![ProtocolMessage::new(
            Party::Client(self.id),
            Party::Server,
            payload,
        )]
    }

    /// Processes one round. `inbox` holds the server's messages addressed to
    /// this client for the current phase (empty in the advertise round).
    pub fn step(&mut self, inbox: &[ProtocolMessage]) -> Result<Vec<ProtocolMessage>> {
        if let Some(m) = inbox.iter().find(|m| m.to != Party::Client(self.id)) {
            return Err(Error::Protocol(format!(
                "client {} received a message addressed to {:?}",
                self.id, m.to
            )));
        }
        let payload = inbox.first().map(|m| &m.payload);
        match (self.phase.clone(), payload) {
            (ClientPhase::Advertise, None) => Ok(self.advertise()),
            (ClientPhase::ShareKeys, Some(Payload::KeyList { adverts })) => {
                self.share_keys(adverts)
            }
            (ClientPhase::MaskedInput, Some(Payload::ForwardedShares { bundles })) => {
                self.masked_input(bundles)
            }
            (ClientPhase::Consistency, Some(Payload::SurvivorList { survivors })) => {
                Ok(self.consistency(survivors))
            }
            (ClientPhase::Unmask, Some(Payload::SignatureList { participants, sigs })) => {
                Ok(self.unmask(participants, sigs))
            }
            (ClientPhase::Done | ClientPhase::Aborted(_), _) => Ok(Vec::new()),
            (phase, p) => Err(Error::Protocol(format!(
                "client {} in phase {phase:?} cannot accept {:?}",
                self.id,
                p.map(|p| p.round())
            ))),
        }
    }

    fn advertise(&mut self) -> Vec<ProtocolMessage> {
        let msg = advert_bytes(self.id, &self.keys1.pk, &self.keys2.pk);
        let sig = sign(&msg, &self.identity, &self.params.group).expect("valid identity key");
        self.phase = ClientPhase::ShareKeys;
        self.to_server(Payload::KeyAdvert {
            advert: Advert {
                client: self.id,
                pk1: self.keys1.pk.clone(),
                pk2: self.keys2.pk.clone(),
                sig,
            },
        })
    }

    fn share_keys(&mut self, adverts: &[Advert]) -> Result<Vec<ProtocolMessage>> {
        let group = &self.params.group;
        for a in adverts {
            let Some(id_pk) = self.registry.public_key(a.client) else {
                return Ok(self.abort(format!("client {} is not registered", a.client)));
            };
            if !verify(
                &advert_bytes(a.client, &a.pk1, &a.pk2),
                &a.sig,
                id_pk,
                group,
            ) {
                return Ok(self.abort(format!("advert signature of client {} invalid", a.client)));
            }
        }
        let mut u1: Vec<ClientId> = adverts.iter().map(|a| a.client).collect();
        u1.sort_unstable();
        u1.dedup();
        if u1.len() != adverts.len() || !u1.contains(&self.id) {
            return Ok(self.abort("inconsistent key list"));
        }
        if u1.len() < self.params.k {
            return Ok(self.abort("below threshold"));
        }
        for a in adverts {
            if a.client != self.id {
                let s = dh_shared_secret(&self.keys1, &a.pk1, group)?;
                self.pair_secrets.insert(a.client, s);
            }
            self.peers.insert(a.client, (a.pk1.clone(), a.pk2.clone()));
        }
        self.u1 = u1;
        let n = self.u1.len();
        let k = self.params.k;
        let sk1_shares = self
            .params
            .shamir
            .split(self.keys1.sk, k, n, &mut self.rng)?;
        let b_shares = self.params.shamir.split(self.b, k, n, &mut self.rng)?;
        let mut bundles = Vec::with_capacity(n - 1);
        for (rank, &peer) in self.u1.clone().iter().enumerate() {
            let held = HeldShares {
                sk1: sk1_shares[rank],
                b: b_shares[rank],
            };
            if peer == self.id {
                self.held.insert(self.id, held);
                continue;
            }
            let plain = [self.id, peer, held.sk1.value, held.b.value];
            let ks = self.keystream(self.id, peer)?;
            let q = self.params.shamir.q;
            let ciphertext = plain
                .iter()
                .zip(ks.residues())
                .map(|(&m, &k)| add_mod(m % q, k, q))
                .collect();
            bundles.push(EncryptedShares {
                from: self.id,
                to: peer,
                ciphertext,
            });
        }
        self.phase = ClientPhase::MaskedInput;
        Ok(self.to_server(Payload::KeyShares { bundles }))
    }

    /// Keystream for the `from → to` channel, keyed by `g^{sk2_from·sk2_to}`.
    fn keystream(&self, from: ClientId, to: ClientId) -> Result<FieldVector> {
        let other = if from == self.id { to } else { from };
        let pk2 = &self.peers[&other].1;
        let s = dh_shared_secret(&self.keys2, pk2, &self.params.group)?;
        let seed = hash_parts(&[
            b"fedmask/share-enc/v1",
            &crate::crypto::biguint_bytes(&s),
            &from.to_be_bytes(),
            &to.to_be_bytes(),
        ]);
        let codec = FixedPointCodec {
            modulus: self.params.shamir.q,
            frac_bits: 0,
            max_summands: 1,
        };
        Ok(prg_expand_with(
            b"share-enc",
            &BigUint::from_bytes_be(&seed),
            4,
            &codec,
        ))
    }

    fn masked_input(&mut self, bundles: &[EncryptedShares]) -> Result<Vec<ProtocolMessage>> {
        let q = self.params.shamir.q;
        let n = self.u1.len();
        let k = self.params.k;
        let mut u2 = vec![self.id];
        for bnd in bundles {
            if bnd.to != self.id || !self.peers.contains_key(&bnd.from) || bnd.ciphertext.len() != 4
            {
                return Ok(self.abort(format!("malformed share bundle from {}", bnd.from)));
            }
            let ks = self.keystream(bnd.from, self.id)?;
            let plain: Vec<u64> = bnd
                .ciphertext
                .iter()
                .zip(ks.residues())
                .map(|(&c, &k)| sub_mod(c, k, q))
                .collect();
            if plain[0] != bnd.from || plain[1] != self.id {
                return Ok(self.abort(format!("share bundle from {} failed to decrypt", bnd.from)));
            }
            let index = self.rank(self.id) as u64 + 1;
            let share = |value| ShamirShare {
                index,
                value,
                threshold: k,
                total: n,
            };
            self.held.insert(
                bnd.from,
                HeldShares {
                    sk1: share(plain[2]),
                    b: share(plain[3]),
                },
            );
            u2.push(bnd.from);
        }
        u2.sort_unstable();
        u2.dedup();
        if u2.len() < k {
            return Ok(self.abort("below threshold"));
        }
        self.held.retain(|id, _| u2.contains(id));
        let codec = self.params.codec;
        let dim = self.params.dim;
        let mut c = self.encoded_input.add(&self_mask(self.b, dim, &codec))?;
        for &peer in &u2 {
            if peer == self.id {
                continue;
            }
            let p = pair_mask(&self.pair_secrets[&peer], dim, &codec);
            if adds_pair_mask(self.id, peer) {
                c.add_assign(&p)?;
            } else {
                c.sub_assign(&p)?;
            }
        }
        self.u2 = u2;
        self.phase = ClientPhase::Consistency;
        Ok(self.to_server(Payload::MaskedInput { input: c }))
    }

    fn rank(&self, id: ClientId) -> usize {
        self.u1.binary_search(&id).expect("member of U1")
    }

    fn consistency(&mut self, survivors: &[ClientId]) -> Vec<ProtocolMessage> {
        let mut u3 = survivors.to_vec();
        u3.sort_unstable();
        u3.dedup();
        if u3.len() < self.params.k {
            return self.abort("below threshold");
        }
        if !u3.contains(&self.id) || u3.iter().any(|id| !self.u2.contains(id)) {
            return self.abort("survivor list inconsistent with key shares");
        }
        let sig = sign(
            &survivor_list_bytes(&u3),
            &self.identity,
            &self.params.group,
        )
        .expect("valid identity key");
        self.u3 = u3.clone();
        self.phase = ClientPhase::Unmask;
        self.to_server(Payload::ConsistencySig {
            participants: u3,
            sig,
        })
    }

    fn unmask(&mut self, participants: &[ClientId], sigs: &[SignedList]) -> Vec<ProtocolMessage> {
        let mut listed = participants.to_vec();
        listed.sort_unstable();
        if listed != self.u3 {
            return self.abort("signature list is for a different survivor set");
        }
        if sigs.len() < self.params.k {
            return self.abort("below threshold");
        }
        let msg = survivor_list_bytes(&self.u3);
        for s in sigs {
            let ok = self.u3.contains(&s.client)
                && self
                    .registry
                    .public_key(s.client)
                    .is_some_and(|pk| verify(&msg, &s.sig, pk, &self.params.group));
            if !ok {
                return self.abort(format!(
                    "consistency signature of client {} invalid",
                    s.client
                ));
            }
        }
        let mut sk1_shares = Vec::new();
        let mut b_shares = Vec::new();
        for (&owner, held) in &self.held {
            if self.u3.contains(&owner) {
                b_shares.push((owner, held.b));
            } else {
                sk1_shares.push((owner, held.sk1));
            }
        }
        self.phase = ClientPhase::Done;
        self.to_server(Payload::UnmaskShares {
            sk1_shares,
            b_shares,
        })
    }
}

/// Functional form of [`ClientState::step`].
pub fn client_step(
    state: ClientState,
    inbox: &[ProtocolMessage],
) -> Result<(ClientState, Vec<ProtocolMessage>)> {
    let mut state = state;
    let out = state.step(inbox)?;
    Ok((state, out))
}
