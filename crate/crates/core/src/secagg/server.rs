use std::collections::BTreeMap;

use crate::crypto::{dh_shared_secret, KeyPair, ShamirShare};
use crate::error::{Error, Result};
use crate::numeric::FieldVector;
use crate::secagg::messages::*;
use crate::secagg::{adds_pair_mask, pair_mask, self_mask, ProtocolParams};

/// Honest server: forwards faithfully and aggregates.
#[derive(Clone, Debug)]
pub struct ServerState {
    params: ProtocolParams,
    next: Option<Round>,
    pub aborted: Option<String>,
    pub adverts: BTreeMap<ClientId, Advert>,
    pub u1: Vec<ClientId>,
    pub u2: Vec<ClientId>,
    pub u3: Vec<ClientId>,
    pub u4: Vec<ClientId>,
    pub u5: Vec<ClientId>,
    pub masked: BTreeMap<ClientId, FieldVector>,
    pub aggregate: Option<FieldVector>,
}

/// Shares revealed by one client in the unmask round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Revealed {
    pub sk1: Vec<(ClientId, ShamirShare)>,
    pub b: Vec<(ClientId, ShamirShare)>,
}

impl ServerState {
    pub fn new(params: ProtocolParams) -> Self {
        ServerState {
            params,
            next: Some(Round::Advertise),
            aborted: None,
            adverts: BTreeMap::new(),
            u1: Vec::new(),
            u2: Vec::new(),
            u3: Vec::new(),
            u4: Vec::new(),
            u5: Vec::new(),
            masked: BTreeMap::new(),
            aggregate: None,
        }
    }

    /// The round whose client messages the server expects next; `None` once
    /// finished or aborted.
    pub fn expecting(&self) -> Option<Round> {
        self.next
    }

    fn abort(&mut self, reason: impl Into<String>) -> Vec<ProtocolMessage> {
        self.aborted = Some(reason.into());
        self.next = None;
        Vec::new()
    }

    fn check_threshold(&mut self, count: usize) -> bool {
        if count < self.params.k {
            self.abort("below threshold");
            false
        } else {
            true
        }
    }

    fn send(to: &[ClientId], payload: impl Fn(ClientId) -> Payload) -> Vec<ProtocolMessage> {
        to.iter()
            .map(|&id| ProtocolMessage::new(Party::Server, Party::Client(id), payload(id)))
            .collect()
    }

    /// Consumes every client message of the expected round and emits the
    /// server's replies.
    pub fn step(&mut self, inbox: &[ProtocolMessage]) -> Result<Vec<ProtocolMessage>> {
        let Some(round) = self.next else {
            return Ok(Vec::new());
        };
        let mut senders = Vec::with_capacity(inbox.len());
        for m in inbox {
            let Party::Client(id) = m.from else {
                return Err(Error::Protocol("server received a server message".into()));
            };
            if m.to != Party::Server || m.round != round || m.payload.round() != round {
                return Err(Error::Protocol(format!(
                    "server expected {round:?} input, got {:?} from client {id}",
                    m.round
                )));
            }
            if senders.contains(&id) {
                return Err(Error::Protocol(format!(
                    "client {id} sent twice in {round:?}"
                )));
            }
            senders.push(id);
        }
        senders.sort_unstable();
        match round {
            Round::Advertise => {
                for m in inbox {
                    if let Payload::KeyAdvert { advert } = &m.payload {
                        self.adverts.insert(advert.client, advert.clone());
                    }
                }
                self.u1 = senders;
                if !self.check_threshold(self.u1.len()) {
                    return Ok(Vec::new());
                }
                let adverts: Vec<Advert> = self.adverts.values().cloned().collect();
                self.next = Some(Round::ShareKeys);
                Ok(Self::send(&self.u1, |_| Payload::KeyList {
                    adverts: adverts.clone(),
                }))
            }
            Round::ShareKeys => {
                self.u2 = senders;
                if !self.check_threshold(self.u2.len()) {
                    return Ok(Vec::new());
                }
                let mut routed: BTreeMap<ClientId, Vec<EncryptedShares>> = BTreeMap::new();
                for m in inbox {
                    if let Payload::KeyShares { bundles } = &m.payload {
                        for b in bundles {
                            if self.u2.contains(&b.to) {
                                routed.entry(b.to).or_default().push(b.clone());
                            }
                        }
                    }
                }
                self.next = Some(Round::MaskedInput);
                Ok(Self::send(&self.u2, |id| Payload::ForwardedShares {
                    bundles: routed.get(&id).cloned().unwrap_or_default(),
                }))
            }
            Round::MaskedInput => {
                for m in inbox {
                    if let (Party::Client(id), Payload::MaskedInput { input }) =
                        (m.from, &m.payload)
                    {
                        self.masked.insert(id, input.clone());
                    }
                }
                self.u3 = senders;
                if !self.check_threshold(self.u3.len()) {
                    return Ok(Vec::new());
                }
                let u3 = self.u3.clone();
                self.next = Some(Round::Consistency);
                Ok(Self::send(&self.u3, |_| Payload::SurvivorList {
                    survivors: u3.clone(),
                }))
            }
            Round::Consistency => {
                let mut sigs = Vec::new();
                for m in inbox {
                    if let (Party::Client(id), Payload::ConsistencySig { participants, sig }) =
                        (m.from, &m.payload)
                    {
                        let mut p = participants.clone();
                        p.sort_unstable();
                        if p != self.u3 {
                            return Ok(
                                self.abort(format!("client {id} signed a different survivor list"))
                            );
                        }
                        sigs.push(SignedList {
                            client: id,
                            sig: sig.clone(),
                        });
                    }
                }
                sigs.sort_by_key(|s| s.client);
                self.u4 = senders;
                if !self.check_threshold(self.u4.len()) {
                    return Ok(Vec::new());
                }
                let u3 = self.u3.clone();
                self.next = Some(Round::Unmask);
                Ok(Self::send(&self.u4, |_| Payload::SignatureList {
                    participants: u3.clone(),
                    sigs: sigs.clone(),
                }))
            }
            Round::Unmask => {
                self.u5 = senders;
                self.next = None;
                if self.u5.len() < self.params.k {
                    self.aborted = Some("below threshold".into());
                    return Ok(Vec::new());
                }
                let revealed: Vec<Revealed> = inbox
                    .iter()
                    .filter_map(|m| match &m.payload {
                        Payload::UnmaskShares {
                            sk1_shares,
                            b_shares,
                        } => Some(Revealed {
                            sk1: sk1_shares.clone(),
                            b: b_shares.clone(),
                        }),
                        _ => None,
                    })
                    .collect();
                match unmask_aggregate(
                    &self.params,
                    &self.adverts,
                    &self.masked,
                    &self.u2,
                    &self.u3,
                    &revealed,
                ) {
                    Ok(agg) => self.aggregate = Some(agg),
                    Err(e) => self.aborted = Some(e.to_string()),
                }
                Ok(Vec::new())
            }
        }
    }
}

/// Functional form of [`ServerState::step`].
pub fn server_step(
    state: ServerState,
    inbox: &[ProtocolMessage],
) -> Result<(ServerState, Vec<ProtocolMessage>)> {
    let mut state = state;
    let out = state.step(inbox)?;
    Ok((state, out))
}

fn gather(
    revealed: &[Revealed],
    owner: ClientId,
    pick: impl Fn(&Revealed) -> &[(ClientId, ShamirShare)],
) -> Vec<ShamirShare> {
    let mut shares: Vec<ShamirShare> = revealed
        .iter()
        .flat_map(|r| pick(r).iter().filter(|(o, _)| *o == owner).map(|(_, s)| *s))
        .collect();
    shares.sort_by_key(|s| s.index);
    shares.dedup_by_key(|s| s.index);
    shares
}

/// `Σ_{U3} c_u − Σ_{U3} M2_u − Σ_{u∈U3, v∈U2∖U3} ±P_uv`.
pub(crate) fn unmask_aggregate(
    params: &ProtocolParams,
    adverts: &BTreeMap<ClientId, Advert>,
    masked: &BTreeMap<ClientId, FieldVector>,
    u2: &[ClientId],
    u3: &[ClientId],
    revealed: &[Revealed],
) -> Result<FieldVector> {
    let codec = &params.codec;
    let inputs: Vec<&FieldVector> = u3
        .iter()
        .map(|id| {
            masked
                .get(id)
                .ok_or_else(|| Error::Protocol(format!("no masked input from {id}")))
        })
        .collect::<Result<_>>()?;
    let mut agg = FieldVector::sum(inputs)?;
    for &u in u3 {
        let shares = gather(revealed, u, |r| &r.b);
        let b = params.shamir.reconstruct(&shares)?;
        agg.sub_assign(&self_mask(b, params.dim, codec))?;
    }
    for &v in u2.iter().filter(|v| !u3.contains(v)) {
        let shares = gather(revealed, v, |r| &r.sk1);
        let sk1 = params.shamir.reconstruct(&shares)?;
        let pk1 = &adverts
            .get(&v)
            .ok_or_else(|| Error::Protocol(format!("no advert for {v}")))?
            .pk1;
        let kp = KeyPair::from_secret(sk1, &params.group)?;
        if kp.pk != *pk1 {
            return Err(Error::Protocol(format!(
                "reconstructed sk1 of {v} does not match pk1"
            )));
        }
        for &u in u3 {
            let s = dh_shared_secret(&kp, &adverts[&u].pk1, &params.group)?;
            let p = pair_mask(&s, params.dim, codec);
            if adds_pair_mask(u, v) {
                agg.sub_assign(&p)?;
            } else {
                agg.add_assign(&p)?;
            }
        }
    }
    Ok(agg)
}
