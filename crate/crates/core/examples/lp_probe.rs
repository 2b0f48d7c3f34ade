//! Log-perplexity of held-out text under a masked bigram model. Perplexity
//! climbs with alpha; once a mask zeroes a transition the text needs, the
//! sequence is flagged as saturated.
//!
//! cargo run --example lp_probe

use fedmask::attacks::lp_probe;
use fedmask::harness::ALPHA_GRID;
use fedmask::models::data::MarkovSource;
use fedmask::models::BigramLM;
use fedmask::Rng;

fn main() -> fedmask::Result<()> {
    let mut rng = Rng::new(0);
    let src = MarkovSource::random(8, 0.7, &mut rng)?;
    let train = src.corpus(200, 50, &mut rng);
    let test = src.corpus(20, 50, &mut rng);
    let lm = BigramLM::train(8, &train, 0.1)?;
    for r in lp_probe(&lm, &ALPHA_GRID, &test, &rng.child_named("mask"))? {
        println!(
            "alpha {:<5} mean LP {:>8.3} capped {:>8.3} saturated {}/{}",
            r.alpha,
            r.mean_lp,
            r.capped_mean_lp,
            r.saturated_sequences,
            test.len()
        );
    }
    Ok(())
}
