//! A third party picks participants at random; the server controls most of
//! the population and aborts any round where it holds fewer than `k` seats.
//! Retrying until the draw is favourable eventually exposes the honest inputs.
//!
//! cargo run --example strategic_drop

use fedmask::adversary::{run_strategic_drop, StrategicDropConfig};

fn main() -> fedmask::Result<()> {
    let r = run_strategic_drop(&StrategicDropConfig {
        population: 20,
        controlled: 15,
        k: 6,
        select: 10,
        retry_limit: 10,
        dim: 4,
        params: None,
        seed: 3,
    })?;
    for a in &r.attempts {
        println!(
            "attempt {}: {} controlled selected, honest kept {:?}, dropped {:?} -> {}",
            a.attempt, a.controlled_selected, a.honest_kept, a.honest_dropped, a.outcome
        );
    }
    println!(
        "success {} after {} rounds, recovered {} inputs",
        r.success,
        r.rounds_consumed,
        r.recovered.len()
    );
    Ok(())
}
