use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::DhParams;
use crate::error::{Error, Result};
use crate::numeric::{FixedPointCodec, ParamVector, Rng};
use crate::secagg::messages::*;
use crate::secagg::transcript::{RoundTranscript, Survivors, TRANSCRIPT_SCHEMA_VERSION};
use crate::secagg::{ClientState, Dropout, IdentityRegistry, ProtocolParams, ServerState};

/// One protocol execution: the participants with their plaintext inputs and
/// the dropout schedule.
#[derive(Clone, Debug)]
pub struct SessionSpec {
    pub params: ProtocolParams,
    pub inputs: BTreeMap<ClientId, ParamVector>,
    pub dropouts: Vec<Dropout>,
    pub seed: u64,
}

/// The transcript plus every client's final state. Adversaries read the
/// states of the clients they control.
#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub transcript: RoundTranscript,
    pub clients: BTreeMap<ClientId, ClientState>,
    pub registry: IdentityRegistry,
}

fn dropped_before(dropouts: &[Dropout], id: ClientId, round: Round) -> bool {
    dropouts
        .iter()
        .any(|d| d.client == id && d.after.index() < round.index())
}

/// Runs the protocol to completion or abort.
pub fn run_session(spec: &SessionSpec) -> Result<SessionOutcome> {
    spec.params.validate()?;
    if spec.inputs.is_empty() {
        return Err(Error::param("a session needs at least one client"));
    }
    let root = Rng::new(spec.seed);
    let ids: Vec<ClientId> = spec.inputs.keys().copied().collect();
    let (registry, identities) =
        IdentityRegistry::generate(&ids, &spec.params.group, &root.child_named("pki"))?;
    let client_root = root.child_named("clients");
    let mut clients = BTreeMap::new();
    for (&id, input) in &spec.inputs {
        clients.insert(
            id,
            ClientState::new(
                id,
                input,
                spec.params.clone(),
                registry.clone(),
                identities[&id].clone(),
                client_root.child(id),
            )?,
        );
    }
    let mut server = ServerState::new(spec.params.clone());
    let mut log = Vec::new();
    let mut inboxes: BTreeMap<ClientId, Vec<ProtocolMessage>> = BTreeMap::new();
    for round in Round::ALL {
        let mut to_server = Vec::new();
        for (&id, client) in clients.iter_mut() {
            if dropped_before(&spec.dropouts, id, round) {
                continue;
            }
            let inbox = inboxes.remove(&id).unwrap_or_default();
            if round != Round::Advertise && inbox.is_empty() {
                continue;
            }
            to_server.extend(client.step(&inbox)?);
        }
        log.extend(to_server.iter().cloned());
        let replies = server.step(&to_server)?;
        inboxes.clear();
        for m in &replies {
            if let Party::Client(id) = m.to {
                inboxes.entry(id).or_default().push(m.clone());
            }
        }
        log.extend(replies);
        if server.expecting().is_none() {
            break;
        }
    }
    let decoded = server
        .aggregate
        .as_ref()
        .map(|a| spec.params.codec.decode(a));
    let client_aborts = clients
        .values()
        .filter_map(|c| match &c.phase {
            crate::secagg::ClientPhase::Aborted(r) => Some((c.id, r.clone())),
            _ => None,
        })
        .collect();
    let transcript = RoundTranscript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        seed: spec.seed,
        params: spec.params.clone(),
        participants: ids,
        dropouts: spec.dropouts.clone(),
        messages: log,
        survivors: Survivors {
            u1: server.u1.clone(),
            u2: server.u2.clone(),
            u3: server.u3.clone(),
            u4: server.u4.clone(),
            u5: server.u5.clone(),
        },
        aggregate: server.aggregate.clone(),
        decoded,
        aborted: server.aggregate.is_none(),
        abort_reason: server.aborted.clone(),
        client_aborts,
    };
    Ok(SessionOutcome {
        transcript,
        clients,
        registry,
    })
}

/// Which bundled Diffie-Hellman group to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupChoice {
    /// RFC 3526 2048-bit MODP group.
    Rfc3526,
    /// 64-bit safe-prime group.
    #[default]
    SafePrime64,
}

impl GroupChoice {
    pub fn params(self) -> DhParams {
        match self {
            GroupChoice::Rfc3526 => DhParams::rfc3526_2048(),
            GroupChoice::SafePrime64 => DhParams::safe_prime_64(),
        }
    }
}

/// Declarative description of one protocol run with generated inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecAggConfig {
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    pub frac_bits: u32,
    pub group: GroupChoice,
    pub dropouts: Vec<Dropout>,
    pub seed: u64,
    /// Client inputs are drawn uniformly from `[-input_range, input_range)`.
    pub input_range: f64,
}

impl Default for SecAggConfig {
    fn default() -> Self {
        SecAggConfig {
            n: 3,
            k: 2,
            dim: 4,
            frac_bits: crate::numeric::DEFAULT_FRAC_BITS,
            group: GroupChoice::default(),
            dropouts: Vec::new(),
            seed: 0,
            input_range: 1.0,
        }
    }
}

impl SecAggConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("n", "need at least 2 clients"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::config("k", format!("need 1 <= k <= n = {}", self.n)));
        }
        if self.dim == 0 {
            return Err(Error::config("dim", "must be >= 1"));
        }
        if !(self.input_range > 0.0 && self.input_range <= crate::numeric::CLIP_BOUND) {
            return Err(Error::config("input_range", "must lie in (0, 32]"));
        }
        for (i, d) in self.dropouts.iter().enumerate() {
            if d.client == 0 || d.client > self.n as u64 {
                return Err(Error::config(
                    format!("dropouts[{i}].client"),
                    format!("no client {} among 1..={}", d.client, self.n),
                ));
            }
        }
        FixedPointCodec::with_frac_bits(self.frac_bits)
            .map_err(|e| Error::config("frac_bits", e.to_string()))?;
        Ok(())
    }

    /// Inputs for clients `1..=n`, drawn from the config seed.
    pub fn inputs(&self) -> Result<BTreeMap<ClientId, ParamVector>> {
        let rng = Rng::new(self.seed).child_named("inputs");
        (1..=self.n as u64)
            .map(|id| {
                let v = ParamVector::random_uniform(
                    self.dim,
                    -self.input_range,
                    self.input_range,
                    &mut rng.child(id),
                )?;
                Ok((id, v))
            })
            .collect()
    }

    pub fn session(&self) -> Result<SessionSpec> {
        self.validate()?;
        let codec = FixedPointCodec::with_frac_bits(self.frac_bits)?;
        Ok(SessionSpec {
            params: ProtocolParams::new(self.k, self.dim)
                .with_group(self.group.params())
                .with_codec(codec),
            inputs: self.inputs()?,
            dropouts: self.dropouts.clone(),
            seed: self.seed,
        })
    }
}

/// Validates the config, generates inputs and runs one session.
pub fn run_secagg(cfg: &SecAggConfig) -> Result<RoundTranscript> {
    Ok(run_session(&cfg.session()?)?.transcript)
}
