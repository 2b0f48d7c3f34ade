//! Accuracy of masked local models and of their average across alpha, for
//! 10, 100 and 1000 clients. Prints a CSV to stdout.
//!
//! cargo run --release --example alpha_sweep

use fedmask::harness::{alpha_sweep, GlyphTask, ALPHA_GRID};
use fedmask::Rng;

fn main() -> fedmask::Result<()> {
    let pre = GlyphTask::default().pretrain(&Rng::new(0).child_named("pretrain"))?;
    eprintln!("baseline accuracy {:.3}", pre.baseline);
    let seeds: Vec<u64> = (0..3).collect();
    println!("n,alpha,local_accuracy,global_accuracy,deviation");
    for r in alpha_sweep(&pre, &[10, 100, 1000], &ALPHA_GRID, &seeds, 50)? {
        println!(
            "{},{},{:.4},{:.4},{:.5}",
            r.n, r.alpha, r.local_accuracy, r.global_accuracy, r.deviation
        );
    }
    Ok(())
}
