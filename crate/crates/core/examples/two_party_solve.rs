//! Averaging over two clients hides nothing: either party can solve for the
//! other's model from the average and its own.
//!
//! cargo run --example two_party_solve

use fedmask::adversary::two_party_solve;
use fedmask::fedcore::fedavg_round;
use fedmask::{ParamVector, Rng};

fn main() -> fedmask::Result<()> {
    let mut rng = Rng::new(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x1 = ParamVector::random_uniform(32, -3.0, 3.0, &mut rng)?;
        let x2 = ParamVector::random_uniform(32, -3.0, 3.0, &mut rng)?;
        let y = fedavg_round(&[x1.clone(), x2.clone()])?;
        worst = worst.max(two_party_solve(&y, &x2)?.max_abs_diff(&x1)?);
    }
    println!("largest error over 100 rounds: {worst:.3e}");
    Ok(())
}
