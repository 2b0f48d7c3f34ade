//! Malicious-server strategies run against [`crate::secagg`].
//!
//! Controlled ("sybil") clients run the genuine client state machine. After a
//! session finishes, the adversary reads the final states of the clients it
//! controls, pools the shares they received and strips the masks from each
//! honest client's masked input.

mod recover;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crypto::{is_prime_u64, Shamir, MAX_SCAN_POLYNOMIALS};
use crate::error::{Error, Result};
use crate::numeric::{FieldVector, ParamVector, Rng};
use crate::secagg::{run_session, ClientId, ProtocolParams, SessionSpec};

pub use recover::{honest_but_curious_candidates, recover_input, PairSource};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryStrategy {
    HonestButCurious,
    SybilMitm {
        sybils: usize,
    },
    ShareCompromise {
        controlled: usize,
    },
    StrategicDrop {
        controlled_fraction: f64,
        retry_limit: usize,
    },
}

impl AdversaryStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::HonestButCurious => "honest_but_curious",
            AdversaryStrategy::SybilMitm { .. } => "sybil_mitm",
            AdversaryStrategy::ShareCompromise { .. } => "share_compromise",
            AdversaryStrategy::StrategicDrop { .. } => "strategic_drop",
        }
    }
}

/// What one strategic-drop round looked like.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempt: usize,
    pub selected: Vec<ClientId>,
    pub controlled_selected: usize,
    pub honest_kept: Vec<ClientId>,
    pub honest_dropped: Vec<ClientId>,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub strategy: String,
    pub success: bool,
    pub reason: Option<String>,
    /// Recovered inputs, decoded, keyed by the honest client's population id.
    pub recovered: BTreeMap<ClientId, ParamVector>,
    /// Largest `|recovered − decode(encode(truth))|`; zero on exact recovery.
    pub max_abs_error: f64,
    /// Every recovered field vector equals the client's encoded input.
    pub bit_exact: bool,
    pub rounds_consumed: usize,
    pub attempts: Vec<AttemptLog>,
    /// Toy-field count of secrets consistent with the controlled shares.
    pub toy_candidates: Option<usize>,
}

impl AttackReport {
    fn failure(strategy: &str, reason: impl Into<String>, rounds: usize) -> Self {
        AttackReport {
            strategy: strategy.into(),
            success: false,
            reason: Some(reason.into()),
            recovered: BTreeMap::new(),
            max_abs_error: 0.0,
            bit_exact: false,
            rounds_consumed: rounds,
            attempts: Vec::new(),
            toy_candidates: None,
        }
    }

    fn record(
        &mut self,
        id: ClientId,
        got: &FieldVector,
        truth: &FieldVector,
        params: &ProtocolParams,
    ) {
        let (g, t) = (params.codec.decode(got), params.codec.decode(truth));
        self.max_abs_error = self
            .max_abs_error
            .max(g.max_abs_diff(&t).unwrap_or(f64::INFINITY));
        self.bit_exact &= got == truth;
        self.recovered.insert(id, g);
    }
}

/// Who distributes keys and participant lists.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyDistribution {
    /// The server relays keys and participant lists (no outside party).
    #[default]
    ServerRelayed,
    /// A trusted third party certifies the participant list to every client.
    TrustedThirdParty,
}

#[derive(Clone, Debug)]
pub struct MitmConfig {
    pub honest: Vec<ParamVector>,
    /// Round size the server claims; it supplies `n − 1` sybils per honest client.
    pub n: usize,
    pub k: usize,
    pub key_distribution: KeyDistribution,
    pub params: Option<ProtocolParams>,
    pub seed: u64,
}

fn params_for(custom: &Option<ProtocolParams>, k: usize, dim: usize) -> ProtocolParams {
    match custom {
        Some(p) => ProtocolParams {
            k,
            dim,
            ..p.clone()
        },
        None => ProtocolParams::new(k, dim),
    }
}

fn dim_of(honest: &[ParamVector]) -> Result<usize> {
    let d = honest
        .first()
        .ok_or_else(|| Error::param("at least one honest client is required"))?
        .dim();
    if honest.iter().any(|v| v.dim() != d) {
        return Err(Error::param("honest inputs differ in dimension"));
    }
    Ok(d)
}

/// Sybil man-in-the-middle: each honest client is placed in its own round
/// whose other `n − 1` members are all sybils, so every pairwise secret and a
/// threshold of its shares are in the server's hands.
pub fn run_mitm(cfg: &MitmConfig) -> Result<AttackReport> {
    const NAME: &str = "sybil_mitm";
    if cfg.key_distribution == KeyDistribution::TrustedThirdParty {
        return Ok(AttackReport::failure(
            NAME,
            "a trusted third party certifies the participant list; the server cannot substitute sybils",
            0,
        ));
    }
    let dim = dim_of(&cfg.honest)?;
    if cfg.n < 2 || cfg.k > cfg.n - 1 || cfg.k == 0 {
        return Err(Error::param("MITM needs n >= 2 and 1 <= k <= n - 1"));
    }
    let params = params_for(&cfg.params, cfg.k, dim);
    let mut report = AttackReport {
        strategy: NAME.into(),
        success: true,
        reason: None,
        recovered: BTreeMap::new(),
        max_abs_error: 0.0,
        bit_exact: true,
        rounds_consumed: 0,
        attempts: Vec::new(),
        toy_candidates: None,
    };
    let root = Rng::new(cfg.seed);
    for (i, x) in cfg.honest.iter().enumerate() {
        let honest_id = 1 + ((i * 7 + 3) % cfg.n) as ClientId;
        let mut inputs = BTreeMap::new();
        for id in 1..=cfg.n as ClientId {
            let v = if id == honest_id {
                x.clone()
            } else {
                ParamVector::zeros(dim)?
            };
            inputs.insert(id, v);
        }
        let spec = SessionSpec {
            params: params.clone(),
            inputs,
            dropouts: Vec::new(),
            seed: root.child(i as u64).next_u64(),
        };
        let out = run_session(&spec)?;
        report.rounds_consumed += 1;
        let sybils: Vec<ClientId> = (1..=cfg.n as ClientId)
            .filter(|&id| id != honest_id)
            .collect();
        let got = recover_input(&out, honest_id, &sybils, PairSource::SybilSecrets)?;
        let truth = params.codec.encode_clipped(x)?;
        report.record(i as ClientId + 1, &got, &truth, &params);
    }
    report.success = report.bit_exact;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ShareCompromiseConfig {
    pub honest: Vec<ParamVector>,
    pub controlled: usize,
    pub k: usize,
    pub params: Option<ProtocolParams>,
    pub seed: u64,
}

/// Largest toy-field prime for the exhaustive consistency scan.
pub const TOY_SHARE_FIELD: u64 = 101;

/// Largest prime `q ≤ TOY_SHARE_FIELD` whose full scan of `q^k`
/// polynomials stays within [`MAX_SCAN_POLYNOMIALS`].
pub fn toy_field_for(k: usize) -> Option<u64> {
    (3..=TOY_SHARE_FIELD)
        .rev()
        .filter(|&q| is_prime_u64(q))
        .find(|&q| {
            (q as u128)
                .checked_pow(k as u32)
                .is_some_and(|v| v <= MAX_SCAN_POLYNOMIALS as u128)
        })
}

/// The server picks `controlled` of its own clients into a round with the
/// honest ones; if that reaches `k`, pooled shares open every mask.
pub fn run_share_compromise(cfg: &ShareCompromiseConfig) -> Result<AttackReport> {
    const NAME: &str = "share_compromise";
    let dim = dim_of(&cfg.honest)?;
    let n = cfg.honest.len() + cfg.controlled;
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::param(format!("need 1 <= k <= {n}")));
    }
    let params = params_for(&cfg.params, cfg.k, dim);
    let mut rng = Rng::new(cfg.seed).child_named("placement");
    let mut ids: Vec<ClientId> = (1..=n as ClientId).collect();
    rng.shuffle(&mut ids);
    let (honest_ids, controlled_ids) = ids.split_at(cfg.honest.len());
    let mut inputs = BTreeMap::new();
    for (id, x) in honest_ids.iter().zip(&cfg.honest) {
        inputs.insert(*id, x.clone());
    }
    for id in controlled_ids {
        inputs.insert(*id, ParamVector::zeros(dim)?);
    }
    let spec = SessionSpec {
        params: params.clone(),
        inputs,
        dropouts: Vec::new(),
        seed: cfg.seed,
    };
    let out = run_session(&spec)?;
    if cfg.controlled < cfg.k {
        let mut report = AttackReport::failure(
            NAME,
            format!(
                "controlled clients hold {} shares per secret, threshold is {}",
                cfg.controlled, cfg.k
            ),
            1,
        );
        // The exhaustive scan is bounded; larger gaps report no count.
        report.toy_candidates = toy_candidate_count(cfg.controlled, cfg.k, n, &mut rng).ok();
        return Ok(report);
    }
    let mut report = AttackReport {
        strategy: NAME.into(),
        success: true,
        reason: None,
        recovered: BTreeMap::new(),
        max_abs_error: 0.0,
        bit_exact: true,
        rounds_consumed: 1,
        attempts: Vec::new(),
        toy_candidates: None,
    };
    let mut controlled_sorted = controlled_ids.to_vec();
    controlled_sorted.sort_unstable();
    for (pos, (&id, x)) in honest_ids.iter().zip(&cfg.honest).enumerate() {
        let got = recover_input(&out, id, &controlled_sorted, PairSource::ReconstructedSk1)?;
        let truth = params.codec.encode_clipped(x)?;
        report.record(pos as ClientId + 1, &got, &truth, &params);
    }
    report.success = report.bit_exact;
    Ok(report)
}

/// Shares a random secret of a toy field with the same threshold and counts
/// how many candidate secrets stay consistent with `c` of the shares.
fn toy_candidate_count(c: usize, k: usize, n: usize, rng: &mut Rng) -> Result<usize> {
    let q = toy_field_for(k).ok_or_else(|| Error::param("no toy field fits the scan budget"))?;
    let toy = Shamir::new(q)?;
    let n = n.min(q as usize - 1);
    let secret = rng.below(q);
    let shares = toy.split(secret, k, n, rng)?;
    Ok(toy.consistent_secrets(&shares[..c.min(n)], k, 0..q)?.len())
}

#[derive(Clone, Debug)]
pub struct StrategicDropConfig {
    pub population: usize,
    pub controlled: usize,
    pub k: usize,
    /// Participants the third party selects per round.
    pub select: usize,
    pub retry_limit: usize,
    pub dim: usize,
    pub params: Option<ProtocolParams>,
    pub seed: u64,
}

impl StrategicDropConfig {
    /// Honest population members hold random inputs; controlled ones hold zeros.
    pub fn population_inputs(&self) -> Result<BTreeMap<ClientId, ParamVector>> {
        let rng = Rng::new(self.seed).child_named("population");
        (1..=self.population as ClientId)
            .map(|id| {
                Ok((
                    id,
                    ParamVector::random_uniform(self.dim, -1.0, 1.0, &mut rng.child(id))?,
                ))
            })
            .collect()
    }

    /// The ids the server controls: a seeded random subset of the population.
    pub fn controlled_ids(&self) -> BTreeSet<ClientId> {
        let mut rng = Rng::new(self.seed).child_named("sybil-registration");
        rng.sample_indices(self.population, self.controlled)
            .into_iter()
            .map(|i| i as ClientId + 1)
            .collect()
    }
}

/// A third party selects the round at random; the server declares enough
/// selected honest clients dropped that its own clients form a majority, then
/// compromises the shares. Rounds with too few survivors are discarded.
pub fn run_strategic_drop(cfg: &StrategicDropConfig) -> Result<AttackReport> {
    const NAME: &str = "strategic_drop";
    if cfg.controlled > cfg.population || cfg.select == 0 || cfg.select > cfg.population {
        return Err(Error::param(
            "need controlled <= population and 1 <= select <= population",
        ));
    }
    if cfg.k == 0 || cfg.dim == 0 {
        return Err(Error::param("k and dim must be >= 1"));
    }
    let params = params_for(&cfg.params, cfg.k, cfg.dim);
    let controlled = cfg.controlled_ids();
    let population = cfg.population_inputs()?;
    let ttp = Rng::new(cfg.seed).child_named("third-party-selection");
    let mut attempts = Vec::new();
    for attempt in 0..cfg.retry_limit {
        let mut selected: Vec<ClientId> = ttp
            .child(attempt as u64)
            .sample_indices(cfg.population, cfg.select)
            .into_iter()
            .map(|i| i as ClientId + 1)
            .collect();
        selected.sort_unstable();
        let ctrl: Vec<ClientId> = selected
            .iter()
            .copied()
            .filter(|id| controlled.contains(id))
            .collect();
        let honest: Vec<ClientId> = selected
            .iter()
            .copied()
            .filter(|id| !controlled.contains(id))
            .collect();
        let mut log = AttemptLog {
            attempt,
            selected: selected.clone(),
            controlled_selected: ctrl.len(),
            honest_kept: Vec::new(),
            honest_dropped: Vec::new(),
            outcome: String::new(),
        };
        if honest.is_empty() {
            log.outcome = "round pretended complete".into();
            attempts.push(log);
            continue;
        }
        let keep = honest.len().min(ctrl.len().saturating_sub(1));
        log.honest_kept = honest[..keep].to_vec();
        log.honest_dropped = honest[keep..].to_vec();
        if ctrl.len() < cfg.k || keep == 0 || ctrl.len() + keep < cfg.k {
            log.outcome = "round discarded".into();
            attempts.push(log);
            continue;
        }
        let mut inputs = BTreeMap::new();
        for id in ctrl.iter().chain(&log.honest_kept) {
            inputs.insert(*id, population[id].clone());
        }
        let spec = SessionSpec {
            params: params.clone(),
            inputs,
            dropouts: Vec::new(),
            seed: ttp.child(attempt as u64).child_named("session").next_u64(),
        };
        let out = run_session(&spec)?;
        let mut report = AttackReport {
            strategy: NAME.into(),
            success: true,
            reason: None,
            recovered: BTreeMap::new(),
            max_abs_error: 0.0,
            bit_exact: true,
            rounds_consumed: attempt + 1,
            attempts: Vec::new(),
            toy_candidates: None,
        };
        for &id in &log.honest_kept {
            let got = recover_input(&out, id, &ctrl, PairSource::ReconstructedSk1)?;
            let truth = params.codec.encode_clipped(&population[&id])?;
            report.record(id, &got, &truth, &params);
        }
        report.success = report.bit_exact;
        log.outcome = "compromised".into();
        attempts.push(log);
        report.attempts = attempts;
        return Ok(report);
    }
    let mut report = AttackReport::failure(NAME, "retry limit exhausted", cfg.retry_limit);
    report.attempts = attempts;
    Ok(report)
}

/// With two-party averaging `y = (x1 + x2)/2`, the other party's input is
/// `x1 = 2y − x2`.
pub fn two_party_solve(y: &ParamVector, x2: &ParamVector) -> Result<ParamVector> {
    y.scale(2.0)?.sub(x2)
}
