//! Uniform masks `U[-α, α]` average out: the mean of `n` masks has standard
//! deviation `α/√(3n)` per coordinate.
//!
//! cargo run --example clt_cancellation

use fedmask::harness::clt_statistic;

fn main() -> fedmask::Result<()> {
    let seeds: Vec<u64> = (0..30).collect();
    println!(
        "{:>6} {:>5} {:>10} {:>10} {:>7}",
        "n", "alpha", "empirical", "predicted", "rel"
    );
    for n in [10, 100, 1000] {
        for alpha in [0.1, 0.5] {
            let emp = clt_statistic(n, alpha, 100, &seeds)?;
            let pred = alpha / (3.0 * n as f64).sqrt();
            println!(
                "{n:>6} {alpha:>5} {emp:>10.6} {pred:>10.6} {:>7.4}",
                (emp - pred).abs() / pred
            );
        }
    }
    Ok(())
}
