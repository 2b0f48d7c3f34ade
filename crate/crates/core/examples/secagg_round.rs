//! One secure-aggregation round with ten clients, one of which goes silent
//! after sending its masked input. The server still recovers the sum of the
//! inputs it received, and the transcript replays to the same aggregate.
//!
//! cargo run --example secagg_round

use fedmask::secagg::{replay_aggregate, run_session, Dropout, Round, SecAggConfig};
use fedmask::FieldVector;

fn main() -> fedmask::Result<()> {
    let cfg = SecAggConfig {
        n: 10,
        k: 6,
        dim: 4,
        dropouts: vec![Dropout {
            client: 7,
            after: Round::MaskedInput,
        }],
        seed: 2024,
        ..SecAggConfig::default()
    };
    let spec = cfg.session()?;
    let t = run_session(&spec)?.transcript;
    println!(
        "survivors per round: {:?}",
        [&t.survivors.u1, &t.survivors.u3, &t.survivors.u5].map(|u| u.len())
    );

    let encoded = t
        .survivors
        .u3
        .iter()
        .map(|id| spec.params.codec.encode_clipped(&spec.inputs[id]))
        .collect::<fedmask::Result<Vec<_>>>()?;
    let plain = FieldVector::sum(&encoded)?;
    let agg = t.aggregate.clone().expect("round completed");
    println!("aggregate == field sum of inputs: {}", agg == plain);
    println!(
        "decoded sum: {:?}",
        t.decoded.as_ref().map(|d| d.as_slice().to_vec())
    );

    let again = fedmask::secagg::RoundTranscript::from_jsonl(&t.to_jsonl())?;
    println!(
        "replayed aggregate matches: {}",
        replay_aggregate(&again)?.as_ref() == Some(&agg)
    );
    println!("{} messages logged", t.messages.len());
    Ok(())
}
