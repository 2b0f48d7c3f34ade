//! The server enrols clients it controls. With `k` of them in the round their
//! pooled Shamir shares open every honest mask; with `k − 1` they do not, and
//! an exhaustive scan over a toy field shows every secret is still possible.
//!
//! cargo run --example share_compromise

use fedmask::adversary::{run_share_compromise, ShareCompromiseConfig};
use fedmask::{ParamVector, Rng};

fn main() -> fedmask::Result<()> {
    let mut rng = Rng::new(11);
    let honest = (0..4)
        .map(|_| ParamVector::random_uniform(5, -1.0, 1.0, &mut rng))
        .collect::<fedmask::Result<Vec<_>>>()?;
    let k = 6;
    for controlled in [k, k - 1] {
        let r = run_share_compromise(&ShareCompromiseConfig {
            honest: honest.clone(),
            controlled,
            k,
            params: None,
            seed: 11,
        })?;
        println!(
            "{controlled} controlled: success {}, bit exact {}, recovered {}, toy candidates {:?}",
            r.success,
            r.bit_exact,
            r.recovered.len(),
            r.toy_candidates
        );
    }
    Ok(())
}
