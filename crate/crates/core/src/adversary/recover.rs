use std::collections::BTreeSet;

use num_bigint::BigUint;

use crate::crypto::{dh_shared_secret, KeyPair, ShamirShare};
use crate::error::{Error, Result};
use crate::numeric::{sub_mod, FieldVector};
use crate::secagg::{
    adds_pair_mask, pair_mask, self_mask, ClientId, Party, Payload, RoundTranscript, SessionOutcome,
};

/// How the adversary obtains the target's pairwise secrets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSource {
    /// Every peer is a sybil, so each `s_ij` sits in a controlled client's state.
    SybilSecrets,
    /// Reconstruct the target's `sk1` from pooled shares and recompute each `s_ij`.
    ReconstructedSk1,
}

fn masked_input_of(t: &RoundTranscript, target: ClientId) -> Result<FieldVector> {
    t.messages
        .iter()
        .find_map(|m| match (&m.from, &m.payload) {
            (Party::Client(id), Payload::MaskedInput { input }) if *id == target => {
                Some(input.clone())
            }
            _ => None,
        })
        .ok_or_else(|| Error::Protocol(format!("client {target} sent no masked input")))
}

/// Strips every mask from `target`'s masked input using what the
/// `controlled` clients learned during the session.
pub fn recover_input(
    out: &SessionOutcome,
    target: ClientId,
    controlled: &[ClientId],
    source: PairSource,
) -> Result<FieldVector> {
    let t = &out.transcript;
    let params = &t.params;
    let (dim, codec) = (params.dim, &params.codec);
    let held: Vec<_> = controlled
        .iter()
        .filter_map(|c| out.clients.get(c)?.held.get(&target).copied())
        .collect();
    let b_shares: Vec<ShamirShare> = held.iter().map(|h| h.b).collect();
    let b = params.shamir.reconstruct(&b_shares)?;
    let mut x = masked_input_of(t, target)?;
    x.sub_assign(&self_mask(b, dim, codec))?;
    let peers: Vec<ClientId> = t
        .survivors
        .u2
        .iter()
        .copied()
        .filter(|&p| p != target)
        .collect();
    let pk1 = |id: ClientId| -> Result<BigUint> {
        t.messages
            .iter()
            .find_map(|m| match &m.payload {
                Payload::KeyAdvert { advert } if advert.client == id => Some(advert.pk1.clone()),
                _ => None,
            })
            .ok_or_else(|| Error::Protocol(format!("no advert for {id}")))
    };
    let target_key = match source {
        PairSource::SybilSecrets => None,
        PairSource::ReconstructedSk1 => {
            let shares: Vec<ShamirShare> = held.iter().map(|h| h.sk1).collect();
            let sk1 = params.shamir.reconstruct(&shares)?;
            let kp = KeyPair::from_secret(sk1, &params.group)?;
            if kp.pk != pk1(target)? {
                return Err(Error::Protocol(
                    "reconstructed sk1 does not match pk1".into(),
                ));
            }
            Some(kp)
        }
    };
    for p in peers {
        let secret = match &target_key {
            Some(kp) => dh_shared_secret(kp, &pk1(p)?, &params.group)?,
            None => out
                .clients
                .get(&p)
                .filter(|_| controlled.contains(&p))
                .and_then(|c| c.pair_secrets.get(&target).cloned())
                .ok_or_else(|| Error::Protocol(format!("peer {p} is not a sybil")))?,
        };
        let m = pair_mask(&secret, dim, codec);
        if adds_pair_mask(target, p) {
            x.sub_assign(&m)?;
        } else {
            x.add_assign(&m)?;
        }
    }
    Ok(x)
}

/// Honest-but-curious view of one coordinate: counts the plaintext residues
/// `x` for which the observed masked value `y` equals `x + m` with `m` a
/// self-mask coordinate reachable from one of `seed_budget` seeds. Pairwise
/// masks only add freedom, so each counted candidate is consistent with
/// everything the server saw. Meant for toy mask fields.
pub fn honest_but_curious_candidates(
    t: &RoundTranscript,
    target: ClientId,
    coordinate: usize,
    seed_budget: u64,
) -> Result<usize> {
    let p = t.params.codec.modulus;
    if p > 1 << 20 {
        return Err(Error::param("candidate scan is limited to toy mask fields"));
    }
    let y = masked_input_of(t, target)?;
    if coordinate >= y.dim() {
        return Err(Error::param("coordinate out of range"));
    }
    let reachable: BTreeSet<u64> = (0..seed_budget)
        .map(|s| self_mask(s, y.dim(), &t.params.codec).residues()[coordinate])
        .collect();
    let yc = y.residues()[coordinate];
    Ok((0..p)
        .filter(|&x| reachable.contains(&sub_mod(yc, x, p)))
        .count())
}
