//! A malicious server that relays keys places each honest client in a round
//! padded with its own sybils. Every mask seed ends up in its hands, so each
//! honest input is recovered exactly. A trusted third party that certifies
//! the participant list stops the attack.
//!
//! cargo run --example sybil_mitm

use fedmask::adversary::{run_mitm, KeyDistribution, MitmConfig};
use fedmask::{ParamVector, Rng};

fn main() -> fedmask::Result<()> {
    let mut rng = Rng::new(5);
    let honest = (0..3)
        .map(|_| ParamVector::random_uniform(6, -1.0, 1.0, &mut rng))
        .collect::<fedmask::Result<Vec<_>>>()?;
    let mut cfg = MitmConfig {
        honest: honest.clone(),
        n: 10,
        k: 6,
        key_distribution: KeyDistribution::ServerRelayed,
        params: None,
        seed: 5,
    };
    let r = run_mitm(&cfg)?;
    println!(
        "server-relayed keys: success {}, bit exact {}, rounds {}",
        r.success, r.bit_exact, r.rounds_consumed
    );
    for (id, x) in &r.recovered {
        let truth = &honest[(*id - 1) as usize];
        println!("  client {id}: max error {:.2e}", x.max_abs_diff(truth)?);
    }

    cfg.key_distribution = KeyDistribution::TrustedThirdParty;
    let r = run_mitm(&cfg)?;
    println!(
        "trusted third party: success {} ({})",
        r.success,
        r.reason.unwrap_or_default()
    );
    Ok(())
}
