use std::collections::BTreeMap;

use serde_json::json;

use crate::adversary::{
    honest_but_curious_candidates, run_mitm, run_share_compromise, run_strategic_drop,
    AdversaryStrategy, AttackReport, KeyDistribution, MitmConfig, ShareCompromiseConfig,
    StrategicDropConfig,
};
use crate::attacks::{DlgConfig, DlgVictim};
use crate::error::{Error, Result};
use crate::harness::{Check, ExperimentReport, ScenarioConfig, Table};
use crate::models::data::glyph_to_pgm;
use crate::numeric::{FixedPointCodec, ParamVector, Rng};
use crate::secagg::{run_session, ProtocolParams, SessionSpec};

/// Seed budget of the honest-but-curious self-mask scan.
const HBC_SEED_BUDGET: u64 = 500;

fn inputs(count: usize, dim: usize, seed: u64) -> Result<Vec<ParamVector>> {
    let rng = Rng::new(seed).child_named("battery/inputs");
    (0..count)
        .map(|i| ParamVector::random_uniform(dim, -1.0, 1.0, &mut rng.child(i as u64)))
        .collect()
}

fn params(cfg: &ScenarioConfig, dim: usize) -> ProtocolParams {
    ProtocolParams::new(cfg.k, dim).with_group(cfg.group.params())
}

/// Runs the honest protocol in a 101-element mask field and counts the
/// plaintexts still consistent with client 1's masked input.
fn honest_but_curious(cfg: &ScenarioConfig, seed: u64) -> Result<usize> {
    let codec = FixedPointCodec::new(101, 0, 5)?;
    let inputs = (1..=cfg.n as u64)
        .map(|id| Ok((id, ParamVector::new(vec![(id % 5) as f64])?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let out = run_session(&SessionSpec {
        params: ProtocolParams::new(cfg.k, 1).with_codec(codec),
        inputs,
        dropouts: Vec::new(),
        seed,
    })?;
    honest_but_curious_candidates(&out.transcript, 1, 0, HBC_SEED_BUDGET)
}

fn mitm_sybils(cfg: &ScenarioConfig) -> usize {
    cfg.strategies
        .iter()
        .find_map(|s| match s {
            AdversaryStrategy::SybilMitm { sybils } => Some(*sybils),
            _ => None,
        })
        .unwrap_or(cfg.n - 1)
}

fn run_strategy(cfg: &ScenarioConfig, s: &AdversaryStrategy, seed: u64) -> Result<AttackReport> {
    match *s {
        AdversaryStrategy::HonestButCurious => unreachable!("handled by the caller"),
        AdversaryStrategy::SybilMitm { sybils } => run_mitm(&MitmConfig {
            honest: inputs(3, cfg.dim, seed)?,
            n: sybils + 1,
            k: cfg.k,
            key_distribution: KeyDistribution::ServerRelayed,
            params: Some(params(cfg, cfg.dim)),
            seed,
        }),
        AdversaryStrategy::ShareCompromise { controlled } => {
            run_share_compromise(&ShareCompromiseConfig {
                honest: inputs(cfg.n.saturating_sub(controlled).max(1), cfg.dim, seed)?,
                controlled,
                k: cfg.k,
                params: Some(params(cfg, cfg.dim)),
                seed,
            })
        }
        AdversaryStrategy::StrategicDrop {
            controlled_fraction,
            retry_limit,
        } => {
            let population = 2 * cfg.n;
            run_strategic_drop(&StrategicDropConfig {
                population,
                controlled: (controlled_fraction * population as f64).round() as usize,
                k: cfg.k,
                select: cfg.n,
                retry_limit,
                dim: cfg.dim,
                params: Some(params(cfg, cfg.dim)),
                seed,
            })
        }
    }
}

fn rate(xs: &[bool]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().filter(|&&b| b).count() as f64 / xs.len() as f64
}

/// Every adversary strategy over the seed battery, then the follow-up a
/// successful man-in-the-middle enables: DLG on the recovered upload, with
/// and without the uniform mask.
pub fn attack_battery(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.strategies.is_empty() {
        return Err(Error::config("strategies", "must not be empty"));
    }
    let mut table = Table::new(&[
        "attack",
        "seed",
        "alpha",
        "success",
        "bit_exact",
        "recovered",
        "rounds",
        "metric",
    ]);
    let mut outcomes: BTreeMap<&'static str, Vec<bool>> = BTreeMap::new();
    let mut hbc_ok = true;
    for s in &cfg.strategies {
        for seed in cfg.seeds() {
            if *s == AdversaryStrategy::HonestButCurious {
                let candidates = honest_but_curious(cfg, seed)?;
                hbc_ok &= candidates >= 2;
                outcomes.entry(s.name()).or_default().push(false);
                table.push(vec![
                    json!(s.name()),
                    json!(seed),
                    json!(0.0),
                    json!(false),
                    json!(false),
                    json!(0),
                    json!(1),
                    json!(candidates),
                ]);
                continue;
            }
            let r = run_strategy(cfg, s, seed)?;
            outcomes.entry(s.name()).or_default().push(r.success);
            table.push(vec![
                json!(s.name()),
                json!(seed),
                json!(0.0),
                json!(r.success),
                json!(r.bit_exact),
                json!(r.recovered.len()),
                json!(r.rounds_consumed),
                json!(r.max_abs_error),
            ]);
        }
    }

    let sybils = mitm_sybils(cfg);
    let mut dlg: BTreeMap<bool, Vec<bool>> = BTreeMap::new();
    let mut images = Vec::new();
    for seed in cfg.seeds() {
        let victim = DlgVictim::glyph(seed)?;
        if seed == cfg.seed {
            images.push((
                format!("dlg-{seed}-truth.pgm"),
                glyph_to_pgm(&victim.truth.inputs()[0])?,
            ));
        }
        for (masked, alpha) in [(false, 0.0), (true, cfg.dlg_alpha)] {
            let upload = victim.upload(alpha)?;
            let mitm = run_mitm(&MitmConfig {
                honest: vec![upload],
                n: sybils + 1,
                k: cfg.k,
                key_distribution: KeyDistribution::ServerRelayed,
                params: Some(params(cfg, victim.model.num_params())),
                seed,
            })?;
            let recovered = mitm
                .recovered
                .values()
                .next()
                .ok_or_else(|| Error::Protocol("man-in-the-middle recovered nothing".into()))?;
            let rep = victim.attack(
                recovered,
                &DlgConfig {
                    init_seed: seed,
                    ..cfg.dlg
                },
            )?;
            dlg.entry(masked).or_default().push(rep.success);
            if seed == cfg.seed {
                images.push((
                    format!("dlg-{seed}-alpha{alpha}.pgm"),
                    glyph_to_pgm(&rep.reconstruction)?,
                ));
            }
            table.push(vec![
                json!("sybil_mitm+dlg"),
                json!(seed),
                json!(alpha),
                json!(rep.success),
                json!(mitm.bit_exact),
                json!(1),
                json!(mitm.rounds_consumed),
                json!(rep.mse),
            ]);
        }
    }

    let mut r = ExperimentReport::new(cfg, table);
    r.artifacts = images;
    for (name, xs) in &outcomes {
        r.summarize(&format!("success_rate_{name}"), rate(xs));
    }
    let plain = rate(dlg.get(&false).map(Vec::as_slice).unwrap_or(&[]));
    let masked = rate(dlg.get(&true).map(Vec::as_slice).unwrap_or(&[]));
    r.summarize("success_rate_dlg_unmasked", plain);
    r.summarize("success_rate_dlg_masked", masked);
    if let Some(xs) = outcomes.get("sybil_mitm") {
        r.check(Check::new(
            "mitm_recovers_every_input",
            rate(xs) == 1.0,
            format!("success rate {}", rate(xs)),
        ));
    }
    if outcomes.contains_key("honest_but_curious") {
        r.check(Check::new(
            "honest_but_curious_recovers_nothing",
            hbc_ok,
            "every scan leaves at least two consistent plaintexts",
        ));
    }
    r.check(Check::new(
        "dlg_after_mitm_succeeds_unmasked",
        plain >= 0.8,
        format!("success rate {plain}"),
    ));
    r.check(Check::new(
        "dlg_after_mitm_blocked_by_mask",
        masked == 0.0,
        format!("success rate {masked} at alpha {}", cfg.dlg_alpha),
    ));
    Ok(r)
}
