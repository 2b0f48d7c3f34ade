use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::crypto::{ShamirShare, Signature};
use crate::numeric::FieldVector;

/// Protocol participant identifier. Clients are numbered from 1.
pub type ClientId = u64;

/// The five protocol rounds, in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Round {
    Advertise,
    ShareKeys,
    MaskedInput,
    Consistency,
    Unmask,
}

impl Round {
    pub const ALL: [Round; 5] = [
        Round::Advertise,
        Round::ShareKeys,
        Round::MaskedInput,
        Round::Consistency,
        Round::Unmask,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Server,
    Client(ClientId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advert {
    pub client: ClientId,
    #[serde(with = "crate::serde_dec::biguint")]
    pub pk1: BigUint,
    #[serde(with = "crate::serde_dec::biguint")]
    pub pk2: BigUint,
    pub sig: Signature,
}

/// A share bundle `[from, to, share of sk1, share of b]` encrypted by adding
/// a keystream modulo the sharing prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncryptedShares {
    pub from: ClientId,
    pub to: ClientId,
    #[serde(with = "crate::serde_dec::u64_vec")]
    pub ciphertext: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedList {
    pub client: ClientId,
    pub sig: Signature,
}

/// Message bodies, tagged by round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    /// Client → server: both public keys, signed with the identity key.
    KeyAdvert { advert: Advert },
    /// Server → clients: every advert received.
    KeyList { adverts: Vec<Advert> },
    /// Client → server: one encrypted bundle per peer.
    KeyShares { bundles: Vec<EncryptedShares> },
    /// Server → client: the bundles addressed to it.
    ForwardedShares { bundles: Vec<EncryptedShares> },
    /// Client → server.
    MaskedInput { input: FieldVector },
    /// Server → clients: who submitted a masked input.
    SurvivorList { survivors: Vec<ClientId> },
    /// Client → server: signature over the canonical survivor list.
    ConsistencySig {
        participants: Vec<ClientId>,
        sig: Signature,
    },
    /// Server → clients: the collected consistency signatures.
    SignatureList {
        participants: Vec<ClientId>,
        sigs: Vec<SignedList>,
    },
    /// Client → server: `sk1` shares of dropped peers and `b` shares of survivors.
    UnmaskShares {
        sk1_shares: Vec<(ClientId, ShamirShare)>,
        b_shares: Vec<(ClientId, ShamirShare)>,
    },
}

impl Payload {
    pub fn round(&self) -> Round {
        match self {
            Payload::KeyAdvert { .. } | Payload::KeyList { .. } => Round::Advertise,
            Payload::KeyShares { .. } | Payload::ForwardedShares { .. } => Round::ShareKeys,
            Payload::MaskedInput { .. } | Payload::SurvivorList { .. } => Round::MaskedInput,
            Payload::ConsistencySig { .. } | Payload::SignatureList { .. } => Round::Consistency,
            Payload::UnmaskShares { .. } => Round::Unmask,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolMessage {
    pub from: Party,
    pub to: Party,
    pub round: Round,
    pub payload: Payload,
}

impl ProtocolMessage {
    pub fn new(from: Party, to: Party, payload: Payload) -> Self {
        ProtocolMessage {
            from,
            to,
            round: payload.round(),
            payload,
        }
    }
}

/// Canonical bytes signed in the consistency round: the tag
/// `fedmask/survivors/v1`, the count as `u32` BE, then each id as `u64` BE in
/// ascending order.
pub fn survivor_list_bytes(ids: &[ClientId]) -> Vec<u8> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut out = b"fedmask/survivors/v1".to_vec();
    out.extend_from_slice(&(sorted.len() as u32).to_be_bytes());
    for id in sorted {
        out.extend_from_slice(&id.to_be_bytes());
    }
    out
}

/// Bytes signed in the advertise round.
pub fn advert_bytes(client: ClientId, pk1: &BigUint, pk2: &BigUint) -> Vec<u8> {
    let mut out = b"fedmask/advert/v1".to_vec();
    out.extend_from_slice(&client.to_be_bytes());
    for pk in [pk1, pk2] {
        let b = crate::crypto::biguint_bytes(pk);
        out.extend_from_slice(&(b.len() as u32).to_be_bytes());
        out.extend_from_slice(&b);
    }
    out
}
