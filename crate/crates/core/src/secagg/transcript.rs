use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{FieldVector, ParamVector};
use crate::secagg::messages::*;
use crate::secagg::server::{unmask_aggregate, Revealed};
use crate::secagg::{Dropout, ProtocolParams};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;
const TRANSCRIPT_SCHEMA: &str = "fedmask.secagg.transcript";

/// Client sets the server observed after each round.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Survivors {
    pub u1: Vec<ClientId>,
    pub u2: Vec<ClientId>,
    pub u3: Vec<ClientId>,
    pub u4: Vec<ClientId>,
    pub u5: Vec<ClientId>,
}

/// Replayable log of one protocol execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub schema_version: u32,
    pub seed: u64,
    pub params: ProtocolParams,
    pub participants: Vec<ClientId>,
    pub dropouts: Vec<Dropout>,
    pub messages: Vec<ProtocolMessage>,
    pub survivors: Survivors,
    pub aggregate: Option<FieldVector>,
    pub decoded: Option<ParamVector>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub client_aborts: Vec<(ClientId, String)>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
    seed: u64,
    params: ProtocolParams,
    participants: Vec<ClientId>,
    dropouts: Vec<Dropout>,
}

#[derive(Serialize, Deserialize)]
struct Outcome {
    survivors: Survivors,
    aggregate: Option<FieldVector>,
    decoded: Option<ParamVector>,
    aborted: bool,
    abort_reason: Option<String>,
    client_aborts: Vec<(ClientId, String)>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Line {
    Header(Header),
    Message(ProtocolMessage),
    Outcome(Outcome),
}

impl RoundTranscript {
    /// JSON lines: a header line, one line per message in delivery order,
    /// and an outcome line. Field elements and group elements are decimal
    /// strings.
    pub fn to_jsonl(&self) -> String {
        let mut lines = Vec::with_capacity(self.messages.len() + 2);
        lines.push(Line::Header(Header {
            schema: TRANSCRIPT_SCHEMA.into(),
            version: self.schema_version,
            seed: self.seed,
            params: self.params.clone(),
            participants: self.participants.clone(),
            dropouts: self.dropouts.clone(),
        }));
        lines.extend(self.messages.iter().cloned().map(Line::Message));
        lines.push(Line::Outcome(Outcome {
            survivors: self.survivors.clone(),
            aggregate: self.aggregate.clone(),
            decoded: self.decoded.clone(),
            aborted: self.aborted,
            abort_reason: self.abort_reason.clone(),
            client_aborts: self.client_aborts.clone(),
        }));
        let mut out = String::new();
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<RoundTranscript> {
        let mut header = None;
        let mut outcome = None;
        let mut messages = Vec::new();
        for (i, raw) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let line: Line = serde_json::from_str(raw)
                .map_err(|e| Error::Decode(format!("transcript line {}: {e}", i + 1)))?;
            match line {
                Line::Header(h) => header = Some(h),
                Line::Message(m) => messages.push(m),
                Line::Outcome(o) => outcome = Some(o),
            }
        }
        let h = header.ok_or_else(|| Error::Decode("transcript has no header".into()))?;
        if h.schema != TRANSCRIPT_SCHEMA || h.version != TRANSCRIPT_SCHEMA_VERSION {
            return Err(Error::Decode(format!(
                "unsupported transcript schema {} v{}",
                h.schema, h.version
            )));
        }
        let o = outcome.ok_or_else(|| Error::Decode("transcript has no outcome".into()))?;
        Ok(RoundTranscript {
            schema_version: h.version,
            seed: h.seed,
            params: h.params,
            participants: h.participants,
            dropouts: h.dropouts,
            messages,
            survivors: o.survivors,
            aggregate: o.aggregate,
            decoded: o.decoded,
            aborted: o.aborted,
            abort_reason: o.abort_reason,
            client_aborts: o.client_aborts,
        })
    }
}

/// Recomputes the aggregate from the logged messages alone. `None` when the
/// log never reaches the unmask round with enough shares.
pub fn replay_aggregate(t: &RoundTranscript) -> Result<Option<FieldVector>> {
    let mut adverts = BTreeMap::new();
    let mut u2 = Vec::new();
    let mut masked = BTreeMap::new();
    let mut revealed = Vec::new();
    for m in &t.messages {
        let Party::Client(id) = m.from else { continue };
        match &m.payload {
            Payload::KeyAdvert { advert } => {
                adverts.insert(advert.client, advert.clone());
            }
            Payload::KeyShares { .. } => u2.push(id),
            Payload::MaskedInput { input } => {
                masked.insert(id, input.clone());
            }
            Payload::UnmaskShares {
                sk1_shares,
                b_shares,
            } => revealed.push(Revealed {
                sk1: sk1_shares.clone(),
                b: b_shares.clone(),
            }),
            _ => {}
        }
    }
    if revealed.len() < t.params.k || masked.len() < t.params.k {
        return Ok(None);
    }
    u2.sort_unstable();
    let u3: Vec<ClientId> = masked.keys().copied().collect();
    unmask_aggregate(&t.params, &adverts, &masked, &u2, &u3, &revealed).map(Some)
}
